//! Subject normalization for one segment.
//!
//! Every distinct subject extracted from the segment's questions becomes a
//! node of a complete graph whose edge weights are clamped cosine
//! similarities of the subjects' embeddings. The node with the highest
//! weighted PageRank represents the segment. Subjects similar enough to it
//! are merged in, and the aspects of all questions about merged subjects are
//! collected under n-gram-deduplicated aspect keys.

use std::collections::HashSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::evaluation::metric_tokens;
use crate::providers::{EmbeddingProvider, ProviderError};
use crate::segmentation::{cosine, Embedding};
use crate::tagger::TaggedQuestion;
use crate::transcript::normalize_text;

/// Aspect key for questions that name a subject but no aspect.
pub const GENERAL_ASPECT: &str = "(general)";

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("embedding dimension {found} differs from {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("network has no nodes")]
    Empty,
    #[error("invalid edge weights: {0}")]
    InvalidWeights(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectNode {
    pub subject_text: String,
    pub embedding: Embedding,
    pub source_question_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectNetwork {
    pub nodes: Vec<SubjectNode>,
    /// Symmetric, zero diagonal, entries in [0, 1].
    pub edge_weights: Vec<Vec<f64>>,
}

/// `max(0, cos(u, v))`; zero vectors give 0.
pub fn edge_weight(u: &[f64], v: &[f64]) -> Result<f64, NetworkError> {
    if u.len() != v.len() {
        return Err(NetworkError::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    Ok(cosine(u, v).clamp(0.0, 1.0))
}

impl SubjectNetwork {
    pub fn build(nodes: Vec<SubjectNode>) -> Result<Self, NetworkError> {
        if nodes.is_empty() {
            return Err(NetworkError::Empty);
        }
        let n = nodes.len();
        let mut w = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let x = edge_weight(nodes[i].embedding.as_slice(), nodes[j].embedding.as_slice())?;
                w[i][j] = x;
                w[j][i] = x;
            }
        }
        Ok(SubjectNetwork { nodes, edge_weights: w })
    }

    /// Network with explicit weights, checked for symmetry and range.
    #[allow(clippy::needless_range_loop)]
    pub fn from_weights(nodes: Vec<SubjectNode>, edge_weights: Vec<Vec<f64>>) -> Result<Self, NetworkError> {
        let n = nodes.len();
        if n == 0 {
            return Err(NetworkError::Empty);
        }
        if edge_weights.len() != n || edge_weights.iter().any(|r| r.len() != n) {
            return Err(NetworkError::InvalidWeights(format!("matrix is not {n}×{n}")));
        }
        for i in 0..n {
            if edge_weights[i][i] != 0.0 {
                return Err(NetworkError::InvalidWeights(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let x = edge_weights[i][j];
                if !(0.0..=1.0).contains(&x) || x != edge_weights[j][i] {
                    return Err(NetworkError::InvalidWeights(format!("entry ({i}, {j}) = {x}")));
                }
            }
        }
        Ok(SubjectNetwork { nodes, edge_weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PageRankConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        PageRankConfig {
            damping: 0.85,
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRankOutcome {
    pub scores: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Weighted PageRank by power iteration from the uniform vector.
///
/// Node `i` moves to `j` with probability `w(i,j) / Σ_k w(i,k)`; a node
/// with no positive edge jumps uniformly. Iteration stops when the L1
/// change drops below `tol`, or after `max_iter` steps with `converged`
/// false.
pub fn pagerank(weights: &[Vec<f64>], config: &PageRankConfig) -> PageRankOutcome {
    let n = weights.len();
    if n == 0 {
        return PageRankOutcome {
            scores: vec![],
            iterations: 0,
            converged: true,
        };
    }
    let out: Vec<f64> = weights.iter().map(|r| r.iter().sum()).collect();
    let d = config.damping;
    let mut r = vec![1.0 / n as f64; n];
    for it in 1..=config.max_iter {
        let dangling: f64 = (0..n).filter(|&i| out[i] <= 0.0).map(|i| r[i]).sum();
        let base = (1.0 - d) / n as f64 + d * dangling / n as f64;
        let mut next = vec![base; n];
        for i in 0..n {
            if out[i] > 0.0 {
                let share = d * r[i] / out[i];
                for (nj, w) in next.iter_mut().zip(&weights[i]) {
                    *nj += share * w;
                }
            }
        }
        let change: f64 = next.iter().zip(&r).map(|(a, b)| (a - b).abs()).sum();
        r = next;
        if change < config.tol {
            return PageRankOutcome {
                scores: r,
                iterations: it,
                converged: true,
            };
        }
    }
    warn!(max_iter = config.max_iter, "PageRank did not converge");
    PageRankOutcome {
        scores: r,
        iterations: config.max_iter,
        converged: false,
    }
}

const SCORE_TIE: f64 = 1e-12;

/// Index of the highest-PageRank node. Scores within 1e-12 of each other
/// tie; ties go to more source questions, then shorter text, then the
/// lexicographically smaller text.
pub fn select_subject(network: &SubjectNetwork, config: &PageRankConfig) -> (usize, PageRankOutcome) {
    let outcome = pagerank(&network.edge_weights, config);
    let best = argmax_with_ties(&network.nodes, &outcome.scores);
    (best, outcome)
}

fn argmax_with_ties(nodes: &[SubjectNode], scores: &[f64]) -> usize {
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..nodes.len())
        .filter(|&i| scores[i] >= top - SCORE_TIE)
        .min_by(|&a, &b| {
            let (na, nb) = (&nodes[a], &nodes[b]);
            nb.source_question_ids
                .len()
                .cmp(&na.source_question_ids.len())
                .then(na.subject_text.chars().count().cmp(&nb.subject_text.chars().count()))
                .then(na.subject_text.cmp(&nb.subject_text))
                .then(a.cmp(&b))
        })
        .expect("network is nonempty")
}

/// Indices of nodes whose edge weight to `s_norm` is at least
/// `merge_threshold`, always including `s_norm`, in node order.
pub fn filter_similar_subjects(network: &SubjectNetwork, s_norm: usize, merge_threshold: f64) -> Vec<usize> {
    (0..network.len())
        .filter(|&i| i == s_norm || network.edge_weights[s_norm][i] >= merge_threshold)
        .collect()
}

fn gram_set(tokens: &[String], n: usize) -> HashSet<Vec<String>> {
    tokens.windows(n).map(<[String]>::to_vec).collect()
}

/// Jaccard similarity of token bigram sets, or of unigram sets when either
/// text has fewer than two tokens. Tokens are casefolded without punctuation.
pub fn ngram_jaccard(a: &str, b: &str) -> f64 {
    let ta = metric_tokens(a);
    let tb = metric_tokens(b);
    let n = if ta.len() < 2 || tb.len() < 2 { 1 } else { 2 };
    let (sa, sb) = (gram_set(&ta, n), gram_set(&tb, n));
    let union = sa.union(&sb).count();
    if union == 0 {
        return 1.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

/// For each text, the index of the kept text it collapses into. A text is
/// kept unless its Jaccard with an earlier kept text reaches `threshold`.
fn dedupe_assign(texts: &[String], threshold: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    texts
        .iter()
        .enumerate()
        .map(
            |(i, t)| match kept.iter().find(|&&k| ngram_jaccard(&texts[k], t) >= threshold) {
                Some(&k) => k,
                None => {
                    kept.push(i);
                    i
                }
            },
        )
        .collect()
}

/// Greedy first-kept n-gram deduplication.
pub fn dedupe_ngrams(texts: &[String], jaccard_threshold: f64) -> Vec<String> {
    dedupe_assign(texts, jaccard_threshold)
        .iter()
        .enumerate()
        .filter(|(i, k)| i == *k)
        .map(|(i, _)| texts[i].clone())
        .collect()
}

/// Aspect key → ids of questions about a merged subject that mention it.
/// Questions without an aspect file under [`GENERAL_ASPECT`].
pub fn map_aspects(
    merged_subjects: &[String],
    tagged: &[TaggedQuestion],
    jaccard_threshold: f64,
) -> IndexMap<String, Vec<String>> {
    let merged: HashSet<String> = merged_subjects.iter().map(|s| normalize_text(s)).collect();
    let mut raw: IndexMap<String, Vec<String>> = IndexMap::new();
    for q in tagged {
        if !q.subjects.iter().any(|s| merged.contains(&normalize_text(s))) {
            continue;
        }
        let aspects: Vec<String> = q.aspects.iter().filter(|a| !a.trim().is_empty()).cloned().collect();
        if aspects.is_empty() {
            raw.entry(GENERAL_ASPECT.to_string())
                .or_default()
                .push(q.question_id.clone());
        }
        for a in aspects {
            let ids = raw.entry(a).or_default();
            if !ids.contains(&q.question_id) {
                ids.push(q.question_id.clone());
            }
        }
    }

    let keys: Vec<String> = raw.keys().cloned().collect();
    let assign = dedupe_assign(&keys, jaccard_threshold);
    let mut out: IndexMap<String, Vec<String>> = IndexMap::new();
    for (i, ids) in raw.into_values().enumerate() {
        // the sentinel never absorbs or is absorbed by a real aspect
        let target = if keys[i] == GENERAL_ASPECT || keys[assign[i]] == GENERAL_ASPECT {
            i
        } else {
            assign[i]
        };
        let entry = out.entry(keys[target].clone()).or_default();
        for id in ids {
            if !entry.contains(&id) {
                entry.push(id);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizationConfig {
    pub merge_threshold: f64,
    pub jaccard_threshold: f64,
    pub pagerank: PageRankConfig,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            merge_threshold: 0.7,
            jaccard_threshold: 0.5,
            pagerank: PageRankConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectScore {
    pub subject: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationResult {
    pub segment_id: String,
    pub s_norm: SubjectNode,
    /// Retained subjects, `s_norm` included, in node order.
    pub merged_subjects: Vec<SubjectNode>,
    pub aspect_map: IndexMap<String, Vec<String>>,
    pub pagerank_scores: Vec<SubjectScore>,
    pub pagerank_converged: bool,
}

/// One node per distinct subject (compared after casefolding and whitespace
/// collapse), labelled with its first surface form.
pub fn subject_nodes(
    tagged: &[TaggedQuestion],
    embedder: &dyn EmbeddingProvider,
) -> Result<Vec<SubjectNode>, NetworkError> {
    let mut groups: IndexMap<String, (String, Vec<String>)> = IndexMap::new();
    for q in tagged {
        for s in &q.subjects {
            let key = normalize_text(s);
            if key.is_empty() {
                continue;
            }
            let entry = groups.entry(key).or_insert_with(|| (s.clone(), vec![]));
            if !entry.1.contains(&q.question_id) {
                entry.1.push(q.question_id.clone());
            }
        }
    }
    if groups.is_empty() {
        return Ok(vec![]);
    }
    let texts: Vec<String> = groups.values().map(|g| g.0.clone()).collect();
    let vectors = embedder.embed(&texts)?;
    if vectors.len() != texts.len() {
        return Err(
            ProviderError::BadResponse(format!("expected {} vectors, got {}", texts.len(), vectors.len())).into(),
        );
    }
    let dim = vectors[0].len();
    if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
        return Err(NetworkError::DimensionMismatch {
            expected: dim,
            found: v.len(),
        });
    }
    Ok(groups
        .into_values()
        .zip(vectors)
        .map(|((subject_text, ids), v)| SubjectNode {
            subject_text,
            embedding: Embedding(v),
            source_question_ids: ids,
        })
        .collect())
}

/// Normalizes one segment's tagged questions. Returns `None`, with a
/// warning, when no question has a subject.
pub fn normalize_segment(
    segment_id: &str,
    tagged: &[TaggedQuestion],
    embedder: &dyn EmbeddingProvider,
    config: &NormalizationConfig,
) -> Result<Option<NormalizationResult>, NetworkError> {
    let nodes = subject_nodes(tagged, embedder)?;
    if nodes.is_empty() {
        warn!(
            segment_id,
            "no subjects extracted; segment left out of the questionnaire"
        );
        return Ok(None);
    }
    let network = SubjectNetwork::build(nodes)?;
    let (best, outcome) = select_subject(&network, &config.pagerank);
    let keep = filter_similar_subjects(&network, best, config.merge_threshold);
    let merged_subjects: Vec<SubjectNode> = keep.iter().map(|&i| network.nodes[i].clone()).collect();
    let merged_texts: Vec<String> = merged_subjects.iter().map(|n| n.subject_text.clone()).collect();
    let aspect_map = map_aspects(&merged_texts, tagged, config.jaccard_threshold);
    let pagerank_scores = network
        .nodes
        .iter()
        .zip(&outcome.scores)
        .map(|(n, &score)| SubjectScore {
            subject: n.subject_text.clone(),
            score,
        })
        .collect();
    Ok(Some(NormalizationResult {
        segment_id: segment_id.to_string(),
        s_norm: network.nodes[best].clone(),
        merged_subjects,
        aspect_map,
        pagerank_scores,
        pagerank_converged: outcome.converged,
    }))
}
