use super::{PosProvider, ProviderError};

/// Small deterministic Penn Treebank tagger: a closed-class lexicon followed
/// by suffix and shape rules. Good enough to give the tagger's POS features
/// a useful signal; not a substitute for a trained tagger.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleTagger;

fn lexicon(lower: &str) -> Option<&'static str> {
    Some(match lower {
        "the" | "a" | "an" | "this" | "that" | "these" | "those" | "each" | "every" | "some" | "any" | "no" | "all"
        | "both" => "DT",
        "what" | "who" | "whom" => "WP",
        "which" => "WDT",
        "whose" => "WP$",
        "how" | "why" | "when" | "where" => "WRB",
        "i" | "you" | "he" | "she" | "it" | "we" | "they" | "me" | "him" | "us" | "them" => "PRP",
        "my" | "your" | "his" | "her" | "its" | "our" | "their" => "PRP$",
        "is" | "'s" => "VBZ",
        "are" | "am" | "'re" | "'m" | "do" | "have" => "VBP",
        "was" | "were" | "did" | "had" => "VBD",
        "be" => "VB",
        "been" => "VBN",
        "being" => "VBG",
        "does" | "has" => "VBZ",
        "will" | "would" | "can" | "could" | "should" | "may" | "might" | "must" | "shall" | "'ll" | "'d" => "MD",
        "n't" | "not" => "RB",
        "and" | "or" | "but" | "nor" => "CC",
        "of" | "in" | "on" | "at" | "by" | "for" | "with" | "about" | "from" | "into" | "over" | "under"
        | "between" | "during" | "after" | "before" | "through" | "against" | "among" | "without" | "within"
        | "per" | "via" | "than" | "as" | "if" | "because" | "while" => "IN",
        "to" => "TO",
        "there" => "EX",
        "more" | "less" => "JJR",
        "most" | "least" => "JJS",
        "very" | "also" | "too" | "so" | "just" | "only" | "again" | "still" => "RB",
        "main" | "new" | "large" | "small" | "big" | "good" | "bad" | "important" | "difficult" | "easy"
        | "current" | "next" | "last" | "first" | "final" | "overall" => "JJ",
        _ => return None,
    })
}

impl RuleTagger {
    pub fn tag_token(token: &str, position: usize) -> &'static str {
        let lower = token.to_lowercase();
        if let Some(tag) = lexicon(&lower) {
            return tag;
        }
        if token.chars().all(|c| !c.is_alphanumeric()) {
            return match token {
                "?" | "!" | "." => ".",
                "," => ",",
                ":" | ";" | "-" | "--" => ":",
                "(" | "[" | "{" => "(",
                ")" | "]" | "}" => ")",
                "$" => "$",
                "\"" | "'" | "“" | "”" => "''",
                _ => "SYM",
            };
        }
        if token.chars().any(|c| c.is_ascii_digit())
            && token
                .chars()
                .all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | '-'))
        {
            return "CD";
        }
        if position > 0 && token.chars().next().is_some_and(char::is_uppercase) {
            return "NNP";
        }
        let n = lower.chars().count();
        let ends = |s: &str| lower.ends_with(s) && n > s.len() + 2;
        if ends("ly") {
            "RB"
        } else if ends("ing") {
            "VBG"
        } else if ends("ed") {
            "VBN"
        } else if ends("tion")
            || ends("sion")
            || ends("ment")
            || ends("ness")
            || ends("ity")
            || ends("ance")
            || ends("ence")
            || ends("ship")
        {
            "NN"
        } else if ends("ous")
            || ends("ful")
            || ends("ive")
            || ends("able")
            || ends("ible")
            || ends("al")
            || ends("ic")
            || ends("less")
        {
            "JJ"
        } else if ends("est") {
            "JJS"
        } else if ends("s") && !lower.ends_with("ss") && !lower.ends_with("us") {
            "NNS"
        } else {
            "NN"
        }
    }
}

impl PosProvider for RuleTagger {
    fn tag(&self, tokens: &[String]) -> Result<Vec<String>, ProviderError> {
        Ok(tokens
            .iter()
            .enumerate()
            .map(|(i, t)| Self::tag_token(t, i).to_string())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transcript::tokenize;

    #[test]
    fn tags_a_question() {
        let tokens = tokenize("What is the arrow symbol on the remote control for?");
        let tags = RuleTagger.tag(&tokens).unwrap();
        assert_eq!(tags, ["WP", "VBZ", "DT", "NN", "NN", "IN", "DT", "NN", "NN", "IN", "."]);
    }

    #[test]
    fn suffix_and_shape_rules() {
        assert_eq!(RuleTagger::tag_token("quickly", 3), "RB");
        assert_eq!(RuleTagger::tag_token("frustrations", 3), "NNS");
        assert_eq!(RuleTagger::tag_token("management", 3), "NN");
        assert_eq!(RuleTagger::tag_token("2048", 3), "CD");
        assert_eq!(RuleTagger::tag_token("Kate", 3), "NNP");
        assert_eq!(RuleTagger::tag_token("incorporated", 3), "VBN");
        assert_eq!(RuleTagger::tag_token("industrial", 3), "JJ");
    }
}
