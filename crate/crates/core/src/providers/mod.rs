//! Pluggable model providers.
//!
//! Every external model the pipeline needs sits behind a small trait. Each
//! trait has an HTTP client speaking a fixed JSON contract and a
//! deterministic local implementation used for offline runs and tests.
//!
//! | Trait                   | HTTP request → response                                            | Local implementation        |
//! |-------------------------|---------------------------------------------------------------------|-----------------------------|
//! | [`EmbeddingProvider`]   | `{"texts": [..]}` → `{"vectors": [[..]]}`                           | [`HashEmbedder`]            |
//! | [`GenerationProvider`]  | `{"prompt", "temperature", "max_tokens"}` → `{"text"}`              | [`MockGenerator`]           |
//! | [`LocatorProvider`]     | `{"question", "turns": [..]}` → `{"ranges": [[start, end]]}`        | [`LexicalLocator`]          |
//! | [`QaProvider`]          | `{"question", "context"}` → `{"answer", "confidence"}`              | [`OverlapQa`]               |
//! | [`PosProvider`]         | `{"tokens": [..]}` → `{"tags": [..]}`                               | [`RuleTagger`]              |

mod embedding;
mod generation;
mod http;
mod pos;
mod qa;

pub use embedding::{HashEmbedder, StaticEmbedder};
pub use generation::{FnGenerator, MockGenerator};
pub use http::{HttpEmbedder, HttpEndpoint, HttpGenerator, HttpLocator, HttpPosTagger, HttpQa, RetryPolicy};
pub use pos::RuleTagger;
pub use qa::{ConstantQa, OverlapQa};

pub use crate::evaluation::LexicalLocator;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProviderError {
    #[error("provider unavailable after {attempts} attempt(s): {detail}")]
    Unavailable { attempts: u32, detail: String },
    #[error("provider returned a malformed response: {0}")]
    BadResponse(String),
}

impl ProviderError {
    pub fn unavailable(detail: impl Into<String>) -> Self {
        ProviderError::Unavailable {
            attempts: 1,
            detail: detail.into(),
        }
    }
}

/// Maps texts to dense vectors, one per input, all of the same dimension.
pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError>;
}

/// One text-generation call. Only `prompt`, `temperature` and `max_tokens`
/// go over the wire; the remaining fields identify the call for
/// deterministic local providers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: usize,
    #[serde(skip)]
    pub segment_id: String,
    #[serde(skip)]
    pub window: usize,
    #[serde(skip)]
    pub trial: usize,
    /// Window text without the prompt template around it.
    #[serde(skip)]
    pub excerpt: String,
}

pub trait GenerationProvider: Send + Sync {
    fn generate(&self, request: &GenerationRequest) -> Result<String, ProviderError>;
}

/// Half-open turn range `[start, end)`.
pub type TurnRange = (usize, usize);

/// Maps a question to the transcript turn ranges that answer it.
pub trait LocatorProvider: Send + Sync {
    fn locate(&self, question: &str, turns: &[String]) -> Result<Vec<TurnRange>, ProviderError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaAnswer {
    pub answer: String,
    pub confidence: f64,
}

pub trait QaProvider: Send + Sync {
    fn answer(&self, question: &str, context: &str) -> Result<QaAnswer, ProviderError>;
}

/// Assigns one Penn Treebank tag per token.
pub trait PosProvider: Send + Sync {
    fn tag(&self, tokens: &[String]) -> Result<Vec<String>, ProviderError>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &P {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        (**self).embed(texts)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        (**self).embed(texts)
    }
}

impl<P: GenerationProvider + ?Sized> GenerationProvider for Box<P> {
    fn generate(&self, request: &GenerationRequest) -> Result<String, ProviderError> {
        (**self).generate(request)
    }
}

impl<P: LocatorProvider + ?Sized> LocatorProvider for Box<P> {
    fn locate(&self, question: &str, turns: &[String]) -> Result<Vec<TurnRange>, ProviderError> {
        (**self).locate(question, turns)
    }
}

impl<P: QaProvider + ?Sized> QaProvider for Box<P> {
    fn answer(&self, question: &str, context: &str) -> Result<QaAnswer, ProviderError> {
        (**self).answer(question, context)
    }
}

impl<P: PosProvider + ?Sized> PosProvider for Box<P> {
    fn tag(&self, tokens: &[String]) -> Result<Vec<String>, ProviderError> {
        (**self).tag(tokens)
    }
}

/// 64-bit FNV-1a. Stable across platforms and releases, which the local
/// providers rely on for reproducible output.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Function words ignored by the lexical providers and keyphrase extraction.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "all", "also", "am", "an", "and", "any", "are", "as", "at", "be", "been", "but", "by", "can",
    "could", "did", "do", "does", "for", "from", "had", "has", "have", "he", "her", "his", "how", "i", "if", "in",
    "into", "is", "it", "its", "just", "like", "me", "might", "more", "my", "no", "not", "of", "on", "one", "or",
    "our", "okay", "she", "should", "so", "some", "that", "the", "their", "them", "then", "there", "these", "they",
    "this", "those", "to", "um", "uh", "up", "us", "was", "we", "well", "were", "what", "when", "where", "which",
    "who", "why", "will", "with", "would", "yeah", "yes", "you", "your", "'s", "n't", "'re", "'ll", "'ve", "'d", "'m",
    "get", "got", "think", "know", "mean", "per", "than", "each", "only", "really", "right", "going", "very", "much",
    "need", "make", "said", "say",
];

pub fn is_stopword(token: &str) -> bool {
    let lower = token.to_lowercase();
    STOPWORDS.contains(&lower.as_str())
}

/// Lowercased alphanumeric tokens with stopwords removed.
pub fn content_tokens(text: &str) -> Vec<String> {
    crate::transcript::tokenize(text)
        .into_iter()
        .filter(|t| !crate::transcript::is_punctuation(t))
        .map(|t| t.to_lowercase())
        .filter(|t| !STOPWORDS.contains(&t.as_str()))
        .collect()
}
