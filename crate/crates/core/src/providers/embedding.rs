use std::collections::HashMap;

use super::{content_tokens, fnv1a, EmbeddingProvider, ProviderError};

/// Deterministic bag-of-features embedder.
///
/// Each content word and each of its character trigrams is hashed into one
/// of `dim` non-negative buckets. Texts sharing vocabulary get high cosine
/// similarity; unrelated texts land near zero. Texts with no content words
/// map to the zero vector.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    trigram_weight: f64,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder {
            dim: 512,
            trigram_weight: 0.35,
        }
    }
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashEmbedder { dim, ..Self::default() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embed_one(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for word in content_tokens(text) {
            let bucket = (fnv1a(word.as_bytes()) % self.dim as u64) as usize;
            v[bucket] += 1.0;
            let padded: Vec<char> = format!("<{word}>").chars().collect();
            if padded.len() > 4 {
                for tri in padded.windows(3) {
                    let tri: String = tri.iter().collect();
                    let bucket = (fnv1a(tri.as_bytes()) % self.dim as u64) as usize;
                    v[bucket] += self.trigram_weight;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

/// Lookup-table embedder keyed by lowercased text. Unknown texts fall back
/// to the wrapped embedder, or fail when there is none.
#[derive(Debug, Clone, Default)]
pub struct StaticEmbedder {
    table: HashMap<String, Vec<f64>>,
    fallback: Option<HashEmbedder>,
}

impl StaticEmbedder {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: AsRef<str>,
    {
        StaticEmbedder {
            table: entries
                .into_iter()
                .map(|(k, v)| (k.as_ref().to_lowercase(), v))
                .collect(),
            fallback: None,
        }
    }

    pub fn with_fallback(mut self, fallback: HashEmbedder) -> Self {
        self.fallback = Some(fallback);
        self
    }
}

impl EmbeddingProvider for StaticEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        texts
            .iter()
            .map(|t| match self.table.get(&t.to_lowercase()) {
                Some(v) => Ok(v.clone()),
                None => match &self.fallback {
                    Some(f) => Ok(f.embed_one(t)),
                    None => Err(ProviderError::BadResponse(format!("no embedding for {t:?}"))),
                },
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn deterministic_unit_vectors() {
        let e = HashEmbedder::default();
        let a = e.embed_one("The remote control needs a bigger arrow button.");
        let b = e.embed_one("The remote control needs a bigger arrow button.");
        assert_eq!(a, b);
        assert!((cos(&a, &a) - 1.0).abs() < 1e-12);
        assert!(a.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn shared_vocabulary_raises_similarity() {
        let e = HashEmbedder::default();
        let edu = e.embed_one("education");
        let stat = e.embed_one("statutory education");
        let budget = e.embed_one("quarterly budget");
        assert!(cos(&edu, &stat) > 0.5);
        assert!(cos(&edu, &budget) < 0.2);
    }

    #[test]
    fn stopword_only_text_is_zero() {
        let v = HashEmbedder::new(16).embed_one("what is the");
        assert!(v.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn static_table_and_fallback() {
        let s = StaticEmbedder::new([("Education", vec![1.0, 0.0])]);
        assert_eq!(s.embed(&["education".into()]).unwrap(), vec![vec![1.0, 0.0]]);
        assert!(s.embed(&["schools".into()]).is_err());
        let s = s.with_fallback(HashEmbedder::new(2));
        assert_eq!(s.embed(&["schools".into()]).unwrap()[0].len(), 2);
    }
}
