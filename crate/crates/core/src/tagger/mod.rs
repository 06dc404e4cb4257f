//! Subject and aspect extraction from questions with a linear-chain CRF.

pub mod bio;
pub mod crf;
pub mod cv;
pub mod features;
pub mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::providers::{PosProvider, ProviderError};
use crate::question_gen::QuestionPool;
use crate::transcript::{detokenize, tokenize};
use bio::{BioLabel, Span};
use crf::{CrfError, CrfModel};

#[derive(Debug, Error, PartialEq)]
pub enum TaggerError {
    #[error("model labels {0:?} are not the BIO label set")]
    WrongLabelSet(Vec<String>),
    #[error(transparent)]
    Crf(#[from] CrfError),
    #[error("POS provider: {0}")]
    Pos(#[from] ProviderError),
    #[error("POS provider returned {found} tags for {expected} tokens")]
    PosLength { expected: usize, found: usize },
    #[error("model file: {0}")]
    Io(String),
}

/// Feature strings for every position of a question.
pub fn featurize(tokens: &[String], pos: &[String]) -> Vec<Vec<String>> {
    (0..tokens.len())
        .map(|i| features::extract_features(tokens, pos, i))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagResult {
    pub labels: Vec<BioLabel>,
    pub subject_spans: Vec<Span>,
    pub aspect_spans: Vec<Span>,
    /// Log-probability of `labels` under the model.
    pub sequence_log_prob: f64,
}

/// A CRF model over the five BIO labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Tagger {
    model: CrfModel,
}

impl Tagger {
    pub fn new(model: CrfModel) -> Result<Self, TaggerError> {
        if model.label_set != train::bio_label_set() {
            return Err(TaggerError::WrongLabelSet(model.label_set));
        }
        Ok(Tagger { model })
    }

    pub fn model(&self) -> &CrfModel {
        &self.model
    }

    pub fn load(path: &std::path::Path) -> Result<Self, TaggerError> {
        let text = std::fs::read_to_string(path).map_err(|e| TaggerError::Io(format!("{}: {e}", path.display())))?;
        Tagger::new(CrfModel::from_json(&text)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), TaggerError> {
        std::fs::write(path, self.model.to_json()).map_err(|e| TaggerError::Io(format!("{}: {e}", path.display())))
    }

    /// Viterbi labelling of one tokenized, POS-tagged question.
    pub fn tag(&self, tokens: &[String], pos: &[String]) -> Result<TagResult, CrfError> {
        if tokens.is_empty() {
            return Ok(TagResult {
                labels: vec![],
                subject_spans: vec![],
                aspect_spans: vec![],
                sequence_log_prob: 0.0,
            });
        }
        let seq = self.model.featurize(&featurize(tokens, pos));
        let (ids, score) = self.model.viterbi(&seq)?;
        let log_z = self.model.log_partition(&seq)?;
        let mut labels: Vec<BioLabel> = ids
            .into_iter()
            .map(|i| BioLabel::from_id(i).expect("label set checked at construction"))
            .collect();
        bio::repair(&mut labels);
        let (subject_spans, aspect_spans) = bio::spans_from_labels(&labels);
        Ok(TagResult {
            labels,
            subject_spans,
            aspect_spans,
            sequence_log_prob: (score - log_z).min(0.0),
        })
    }

    /// Tokenizes, POS-tags and labels a question.
    pub fn tag_text(&self, text: &str, pos: &dyn PosProvider) -> Result<(Vec<String>, TagResult), TaggerError> {
        let tokens = tokenize(text);
        let tags = if tokens.is_empty() { vec![] } else { pos.tag(&tokens)? };
        if tags.len() != tokens.len() {
            return Err(TaggerError::PosLength {
                expected: tokens.len(),
                found: tags.len(),
            });
        }
        let result = self.tag(&tokens, &tags)?;
        Ok((tokens, result))
    }
}

/// A pooled question with its extracted subjects and aspects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedQuestion {
    pub question_id: String,
    pub segment_id: String,
    pub text: String,
    pub tokens: Vec<String>,
    pub labels: Vec<BioLabel>,
    pub subjects: Vec<String>,
    pub aspects: Vec<String>,
    /// Number of generation calls that produced this question.
    pub provenance_count: usize,
}

/// Local question id: `{segment_id}/{n}`, n counting from 1 in pool order.
pub fn question_id(segment_id: &str, n: usize) -> String {
    format!("{segment_id}/{n}")
}

/// Tags every question of a pool, in pool order.
pub fn tag_pool(
    tagger: &Tagger,
    pool: &QuestionPool,
    pos: &dyn PosProvider,
) -> Result<Vec<TaggedQuestion>, TaggerError> {
    pool.questions
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let (tokens, result) = tagger.tag_text(&q.text, pos)?;
            let text_of = |s: &Span| detokenize(&tokens[s.start..s.end]);
            Ok(TaggedQuestion {
                question_id: question_id(&pool.segment_id, i + 1),
                segment_id: pool.segment_id.clone(),
                text: q.text.clone(),
                subjects: result.subject_spans.iter().map(text_of).collect(),
                aspects: result.aspect_spans.iter().map(text_of).collect(),
                labels: result.labels,
                tokens,
                provenance_count: q.provenance.len(),
            })
        })
        .collect()
}
