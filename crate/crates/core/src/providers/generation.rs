use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fnv1a, GenerationProvider, GenerationRequest, ProviderError};
use crate::transcript::{is_punctuation, tokenize};

const TEMPLATES: &[&str] = &[
    "What is the {A} of the {S}?",
    "What did the team decide about the {S}?",
    "How will the {A} be incorporated into the {S}?",
    "What are the main concerns about the {A} of the {S}?",
    "Why is the {A} important for the {S}?",
    "What was said about the {S}?",
    "Who is responsible for the {A} of the {S}?",
    "What are the pros and cons of the {S}?",
];

/// Offline stand-in for a generative model.
///
/// Pulls frequent keyphrases out of the excerpt and fills question templates
/// with them. Output depends only on the excerpt and on
/// `(segment_id, window, temperature, trial)`; at temperature 0 the trial is
/// ignored, so repeated calls agree the way a greedy decoder would.
#[derive(Debug, Clone)]
pub struct MockGenerator {
    pub questions_per_call: usize,
    pub max_candidates: usize,
}

impl Default for MockGenerator {
    fn default() -> Self {
        MockGenerator {
            questions_per_call: 5,
            max_candidates: 10,
        }
    }
}

impl MockGenerator {
    /// Candidate phrases ranked by frequency, then first occurrence. Bigrams
    /// inside runs of content words are preferred over their unigrams.
    pub fn keyphrases(&self, text: &str) -> Vec<String> {
        let tokens: Vec<String> = tokenize(text).into_iter().map(|t| t.to_lowercase()).collect();
        let is_content = |t: &str| {
            !is_punctuation(t)
                && t.chars().count() > 2
                && t.chars().all(|c| c.is_alphabetic() || c == '-')
                && !super::STOPWORDS.contains(&t)
        };
        let mut counts: HashMap<String, (usize, usize)> = HashMap::new();
        let mut order = 0;
        let mut bump = |phrase: String, weight: usize| {
            let entry = counts.entry(phrase).or_insert_with(|| {
                order += 1;
                (0, order)
            });
            entry.0 += weight;
        };
        for (i, tok) in tokens.iter().enumerate() {
            if !is_content(tok) {
                continue;
            }
            bump(tok.clone(), 1);
            if let Some(next) = tokens.get(i + 1) {
                if is_content(next) {
                    bump(format!("{tok} {next}"), 2);
                }
            }
        }
        let mut ranked: Vec<(String, (usize, usize))> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.1 .1.cmp(&b.1 .1)));
        ranked.into_iter().map(|(p, _)| p).take(self.max_candidates).collect()
    }

    fn pick(rng: &mut ChaCha8Rng, n: usize, temperature: f64, greedy: usize) -> usize {
        if temperature <= 0.0 || n == 1 {
            return greedy % n;
        }
        // softmax over rank with temperature
        let weights: Vec<f64> = (0..n).map(|r| (-(r as f64) / (temperature * 3.0)).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut x = rng.random::<f64>() * total;
        for (i, w) in weights.iter().enumerate() {
            if x < *w {
                return i;
            }
            x -= w;
        }
        n - 1
    }
}

impl GenerationProvider for MockGenerator {
    fn generate(&self, request: &GenerationRequest) -> Result<String, ProviderError> {
        let excerpt = if request.excerpt.is_empty() {
            &request.prompt
        } else {
            &request.excerpt
        };
        let phrases = self.keyphrases(excerpt);
        if phrases.is_empty() {
            return Ok("There is not enough content to ask about.".to_string());
        }
        let trial = if request.temperature <= 0.0 { 0 } else { request.trial };
        let seed = fnv1a(
            format!(
                "{}|{}|{}|{}",
                request.segment_id,
                request.window,
                request.temperature.to_bits(),
                trial
            )
            .as_bytes(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut lines = Vec::new();
        if request.temperature > 0.5 && rng.random_bool(0.3) {
            lines.push("Here are some questions about the excerpt:".to_string());
        }
        let n = phrases.len();
        for k in 0..self.questions_per_call {
            let template = TEMPLATES[Self::pick(&mut rng, TEMPLATES.len(), request.temperature, k)];
            let s = Self::pick(&mut rng, n, request.temperature, k / 2);
            let mut a = Self::pick(&mut rng, n, request.temperature, k / 2 + 1);
            if a == s {
                a = (a + 1) % n;
            }
            let q = template.replace("{S}", &phrases[s]).replace("{A}", &phrases[a]);
            lines.push(format!("{}. {}", k + 1, q));
        }
        Ok(lines.join("\n"))
    }
}

/// Generation provider backed by a closure, for tests and experiments.
pub struct FnGenerator<F>(pub F);

impl<F> GenerationProvider for FnGenerator<F>
where
    F: Fn(&GenerationRequest) -> Result<String, ProviderError> + Send + Sync,
{
    fn generate(&self, request: &GenerationRequest) -> Result<String, ProviderError> {
        (self.0)(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(temperature: f64, trial: usize) -> GenerationRequest {
        GenerationRequest {
            prompt: String::new(),
            temperature,
            max_tokens: 128,
            segment_id: "m:0".into(),
            window: 0,
            trial,
            excerpt: "The remote control needs a bigger arrow button. The arrow button on the remote \
                      control is too small, and the remote control battery drains fast."
                .into(),
        }
    }

    #[test]
    fn keyphrases_rank_repeated_bigrams_first() {
        let g = MockGenerator::default();
        let k = g.keyphrases(&request(0.0, 0).excerpt);
        assert_eq!(k[0], "remote control");
        assert!(k.contains(&"arrow button".to_string()));
    }

    #[test]
    fn greedy_output_ignores_trial() {
        let g = MockGenerator::default();
        assert_eq!(
            g.generate(&request(0.0, 0)).unwrap(),
            g.generate(&request(0.0, 7)).unwrap()
        );
    }

    #[test]
    fn sampled_output_is_seeded() {
        let g = MockGenerator::default();
        let a = g.generate(&request(0.8, 3)).unwrap();
        assert_eq!(a, g.generate(&request(0.8, 3)).unwrap());
        let distinct: std::collections::HashSet<String> =
            (0..10).map(|t| g.generate(&request(0.8, t)).unwrap()).collect();
        assert!(distinct.len() > 1);
    }

    #[test]
    fn empty_excerpt_yields_no_questions() {
        let g = MockGenerator::default();
        let mut r = request(0.3, 0);
        r.excerpt = "um uh yeah".into();
        r.prompt = "um uh yeah".into();
        assert!(!g.generate(&r).unwrap().contains('?'));
    }
}
