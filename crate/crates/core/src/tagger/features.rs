//! Token features: identity, suffixes, word shape and POS for the token and
//! its immediate neighbours, plus sentence-position flags.

/// A named feature extractor over `(tokens, pos, position)`.
#[derive(Clone, Copy)]
pub struct FeatureTemplate {
    pub name: &'static str,
    pub extract: fn(&[String], &[String], usize) -> Vec<String>,
}

impl std::fmt::Debug for FeatureTemplate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FeatureTemplate").field("name", &self.name).finish()
    }
}

/// Uppercase → `X`, lowercase → `x`, digit → `d`, anything else kept; runs
/// of the same class collapsed.
pub fn word_shape(token: &str) -> String {
    let mut shape = String::new();
    for c in token.chars() {
        let s = if c.is_uppercase() {
            'X'
        } else if c.is_lowercase() {
            'x'
        } else if c.is_numeric() {
            'd'
        } else {
            c
        };
        if !shape.ends_with(s) {
            shape.push(s);
        }
    }
    shape
}

fn suffix(lower: &str, n: usize) -> String {
    let chars: Vec<char> = lower.chars().collect();
    chars[chars.len().saturating_sub(n)..].iter().collect()
}

fn token_features(prefix: &str, token: &str, pos: &str, out: &mut Vec<String>) {
    let lower = token.to_lowercase();
    out.push(format!("{prefix}suffix2={}", suffix(&lower, 2)));
    out.push(format!("{prefix}suffix3={}", suffix(&lower, 3)));
    out.push(format!("{prefix}shape={}", word_shape(token)));
    out.push(format!("{prefix}pos={pos}"));
    out.push(format!("{prefix}lower={lower}"));
}

fn current(tokens: &[String], pos: &[String], i: usize) -> Vec<String> {
    let mut out = vec!["bias".to_string()];
    token_features("", &tokens[i], &pos[i], &mut out);
    out
}

fn neighbours(tokens: &[String], pos: &[String], i: usize) -> Vec<String> {
    let mut out = Vec::new();
    if i == 0 {
        out.push("-1:BOS".to_string());
    } else {
        token_features("-1:", &tokens[i - 1], &pos[i - 1], &mut out);
    }
    if i + 1 == tokens.len() {
        out.push("+1:EOS".to_string());
    } else {
        token_features("+1:", &tokens[i + 1], &pos[i + 1], &mut out);
    }
    out
}

fn position(tokens: &[String], _pos: &[String], i: usize) -> Vec<String> {
    let mut out = Vec::new();
    if i == 0 {
        out.push("is_first".to_string());
    }
    if i + 1 == tokens.len() {
        out.push("is_last".to_string());
    }
    out
}

pub const DEFAULT_TEMPLATES: [FeatureTemplate; 3] = [
    FeatureTemplate {
        name: "token",
        extract: current,
    },
    FeatureTemplate {
        name: "neighbours",
        extract: neighbours,
    },
    FeatureTemplate {
        name: "position",
        extract: position,
    },
];

/// All default-template features for position `i`.
pub fn extract_features(tokens: &[String], pos: &[String], i: usize) -> Vec<String> {
    assert!(i < tokens.len(), "position {i} out of range");
    assert_eq!(tokens.len(), pos.len());
    DEFAULT_TEMPLATES
        .iter()
        .flat_map(|t| (t.extract)(tokens, pos, i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn current_token_features() {
        let f = extract_features(&s(&["Remote", "control"]), &s(&["NNP", "NN"]), 0);
        for expected in ["lower=remote", "suffix2=te", "suffix3=ote", "shape=Xx", "pos=NNP"] {
            assert!(f.contains(&expected.to_string()), "missing {expected}: {f:?}");
        }
        assert!(f.contains(&"-1:BOS".to_string()));
        assert!(f.contains(&"+1:lower=control".to_string()));
        assert!(f.contains(&"is_first".to_string()));
        assert!(!f.contains(&"is_last".to_string()));
    }

    #[test]
    fn shapes() {
        assert_eq!(word_shape("2048"), "d");
        assert_eq!(word_shape("Remote"), "Xx");
        assert_eq!(word_shape("jog-dial"), "x-x");
        assert_eq!(word_shape("USB2"), "Xd");
        assert_eq!(word_shape("?"), "?");
    }

    #[test]
    fn short_tokens_use_whole_suffix() {
        let f = extract_features(&s(&["is"]), &s(&["VBZ"]), 0);
        assert!(f.contains(&"suffix3=is".to_string()));
        assert!(f.contains(&"+1:EOS".to_string()));
        assert!(f.contains(&"is_last".to_string()));
    }
}
