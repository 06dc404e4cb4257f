//! Linear-chain conditional random field.
//!
//! A sequence's score under labels `y` is the sum of the state weights of
//! every active feature at every position for that position's label, plus
//! the transition weight of every adjacent label pair. Inference runs in log
//! space; the partition function and marginals come from forward-backward,
//! the best labelling from Viterbi. Ties are broken toward the smallest
//! label id everywhere.

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CrfError {
    #[error("sequence is empty")]
    EmptySequence,
    #[error("label id {0} is outside the label set")]
    UnknownLabel(usize),
    #[error("non-finite score encountered; model weights are not finite")]
    NumericalOverflow,
    #[error("batch is empty")]
    EmptyBatch,
    #[error("gold labels have length {labels}, sequence has length {positions}")]
    LengthMismatch { labels: usize, positions: usize },
    #[error("model file: {0}")]
    Format(String),
}

/// Feature ids active at each position of one sequence.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sequence {
    pub features: Vec<Vec<usize>>,
}

impl Sequence {
    pub fn new(features: Vec<Vec<usize>>) -> Self {
        Sequence { features }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// A featurized sequence with gold label ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSequence {
    pub sequence: Sequence,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    pub label_set: Vec<String>,
    pub feature_index: IndexMap<String, usize>,
    /// Row-major `[num_features × num_labels]`.
    pub state_weights: Vec<f64>,
    /// Row-major `[from × to]`.
    pub transition_weights: Vec<f64>,
    pub l2_lambda: f64,
}

/// Output of forward-backward.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    pub log_partition: f64,
    /// `[position][label]` posterior probabilities.
    pub position: Vec<Vec<f64>>,
    /// Expected transition counts summed over the sequence, row-major
    /// `[from × to]`.
    pub transitions: Vec<f64>,
}

pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

const CHUNK: usize = 32;

impl CrfModel {
    /// Zero-weight model over the given labels and feature names.
    pub fn new(label_set: Vec<String>, feature_index: IndexMap<String, usize>, l2_lambda: f64) -> Self {
        let l = label_set.len();
        let f = feature_index.len();
        CrfModel {
            label_set,
            feature_index,
            state_weights: vec![0.0; f * l],
            transition_weights: vec![0.0; l * l],
            l2_lambda,
        }
    }

    /// Zero-weight model with anonymous features `f0..f{n-1}`.
    pub fn with_dimensions(num_labels: usize, num_features: usize, l2_lambda: f64) -> Self {
        let labels = (0..num_labels).map(|i| format!("L{i}")).collect();
        let index = (0..num_features).map(|i| (format!("f{i}"), i)).collect();
        Self::new(labels, index, l2_lambda)
    }

    pub fn num_labels(&self) -> usize {
        self.label_set.len()
    }

    pub fn num_features(&self) -> usize {
        self.feature_index.len()
    }

    pub fn num_params(&self) -> usize {
        self.state_weights.len() + self.transition_weights.len()
    }

    pub fn state(&self, feature: usize, label: usize) -> f64 {
        self.state_weights[feature * self.num_labels() + label]
    }

    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.transition_weights[from * self.num_labels() + to]
    }

    /// All weights as one vector: state weights, then transitions.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.state_weights.clone();
        p.extend_from_slice(&self.transition_weights);
        p
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.num_params());
        let split = self.state_weights.len();
        self.state_weights.copy_from_slice(&params[..split]);
        self.transition_weights.copy_from_slice(&params[split..]);
    }

    pub fn is_finite(&self) -> bool {
        self.state_weights
            .iter()
            .chain(&self.transition_weights)
            .all(|w| w.is_finite())
    }

    /// Maps feature strings to ids, dropping unknown features.
    pub fn featurize<S: AsRef<str>>(&self, features: &[Vec<S>]) -> Sequence {
        Sequence::new(
            features
                .iter()
                .map(|fs| {
                    fs.iter()
                        .filter_map(|f| self.feature_index.get(f.as_ref()).copied())
                        .collect()
                })
                .collect(),
        )
    }

    /// Per-position, per-label state scores.
    pub fn emissions(&self, seq: &Sequence) -> Vec<Vec<f64>> {
        let l = self.num_labels();
        seq.features
            .iter()
            .map(|fs| {
                let mut row = vec![0.0; l];
                for &f in fs {
                    let w = &self.state_weights[f * l..(f + 1) * l];
                    for (r, x) in row.iter_mut().zip(w) {
                        *r += x;
                    }
                }
                row
            })
            .collect()
    }

    /// Unnormalized score of a labelling.
    pub fn score(&self, seq: &Sequence, labels: &[usize]) -> Result<f64, CrfError> {
        self.check_labels(seq, labels)?;
        let mut total = 0.0;
        for (t, fs) in seq.features.iter().enumerate() {
            for &f in fs {
                total += self.state(f, labels[t]);
            }
            if t > 0 {
                total += self.transition(labels[t - 1], labels[t]);
            }
        }
        Ok(total)
    }

    fn check_labels(&self, seq: &Sequence, labels: &[usize]) -> Result<(), CrfError> {
        if labels.len() != seq.len() {
            return Err(CrfError::LengthMismatch {
                labels: labels.len(),
                positions: seq.len(),
            });
        }
        match labels.iter().find(|&&y| y >= self.num_labels()) {
            Some(&y) => Err(CrfError::UnknownLabel(y)),
            None => Ok(()),
        }
    }

    pub fn forward_backward(&self, seq: &Sequence) -> Result<Marginals, CrfError> {
        if seq.is_empty() {
            return Err(CrfError::EmptySequence);
        }
        let l = self.num_labels();
        let n = seq.len();
        let em = self.emissions(seq);

        let mut alpha = vec![vec![0.0; l]; n];
        alpha[0].copy_from_slice(&em[0]);
        for t in 1..n {
            for y in 0..l {
                alpha[t][y] = em[t][y] + log_sum_exp((0..l).map(|p| alpha[t - 1][p] + self.transition(p, y)));
            }
        }
        let mut beta = vec![vec![0.0; l]; n];
        for t in (0..n - 1).rev() {
            for y in 0..l {
                beta[t][y] = log_sum_exp((0..l).map(|q| self.transition(y, q) + em[t + 1][q] + beta[t + 1][q]));
            }
        }
        let log_z = log_sum_exp(alpha[n - 1].iter().copied());
        if !log_z.is_finite() {
            return Err(CrfError::NumericalOverflow);
        }

        let position = (0..n)
            .map(|t| (0..l).map(|y| (alpha[t][y] + beta[t][y] - log_z).exp()).collect())
            .collect();
        let mut transitions = vec![0.0; l * l];
        for t in 1..n {
            for p in 0..l {
                for q in 0..l {
                    transitions[p * l + q] +=
                        (alpha[t - 1][p] + self.transition(p, q) + em[t][q] + beta[t][q] - log_z).exp();
                }
            }
        }
        Ok(Marginals {
            log_partition: log_z,
            position,
            transitions,
        })
    }

    pub fn log_partition(&self, seq: &Sequence) -> Result<f64, CrfError> {
        Ok(self.forward_backward(seq)?.log_partition)
    }

    /// Highest-scoring labelling and its score.
    #[allow(clippy::needless_range_loop)]
    pub fn viterbi(&self, seq: &Sequence) -> Result<(Vec<usize>, f64), CrfError> {
        if seq.is_empty() {
            return Err(CrfError::EmptySequence);
        }
        let l = self.num_labels();
        let n = seq.len();
        let em = self.emissions(seq);
        let mut delta = em[0].clone();
        let mut back = vec![vec![0usize; l]; n];
        for t in 1..n {
            let mut next = vec![0.0; l];
            for y in 0..l {
                let mut best = (0, delta[0] + self.transition(0, y));
                for p in 1..l {
                    let s = delta[p] + self.transition(p, y);
                    if s > best.1 {
                        best = (p, s);
                    }
                }
                back[t][y] = best.0;
                next[y] = best.1 + em[t][y];
            }
            delta = next;
        }
        let mut last = 0;
        for y in 1..l {
            if delta[y] > delta[last] {
                last = y;
            }
        }
        let best_score = delta[last];
        if !best_score.is_finite() {
            return Err(CrfError::NumericalOverflow);
        }
        let mut path = vec![last; n];
        for t in (1..n).rev() {
            path[t - 1] = back[t][path[t]];
        }
        Ok((path, best_score))
    }

    /// Penalized negative log-likelihood of `batch` and its gradient with
    /// respect to [`CrfModel::params`].
    pub fn nll_and_gradient(&self, batch: &[LabeledSequence]) -> Result<(f64, Vec<f64>), CrfError> {
        if batch.is_empty() {
            return Err(CrfError::EmptyBatch);
        }
        for item in batch {
            self.check_labels(&item.sequence, &item.labels)?;
            if item.sequence.is_empty() {
                return Err(CrfError::EmptySequence);
            }
        }
        // fixed-size chunks reduced in order keep the floating-point sum
        // independent of thread scheduling
        let partials: Vec<Result<(f64, Vec<f64>), CrfError>> = batch
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut loss = 0.0;
                let mut grad = vec![0.0; self.num_params()];
                for item in chunk {
                    loss += self.accumulate(item, &mut grad)?;
                }
                Ok((loss, grad))
            })
            .collect();

        let mut loss = 0.0;
        let mut grad = vec![0.0; self.num_params()];
        for partial in partials {
            let (l, g) = partial?;
            loss += l;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        if self.l2_lambda > 0.0 {
            for (g, w) in grad
                .iter_mut()
                .zip(self.state_weights.iter().chain(&self.transition_weights))
            {
                loss += 0.5 * self.l2_lambda * w * w;
                *g += self.l2_lambda * w;
            }
        }
        Ok((loss, grad))
    }

    /// Adds one sequence's expected-minus-empirical counts into `grad` and
    /// returns its negative log-likelihood.
    fn accumulate(&self, item: &LabeledSequence, grad: &mut [f64]) -> Result<f64, CrfError> {
        let l = self.num_labels();
        let m = self.forward_backward(&item.sequence)?;
        let gold = self.score(&item.sequence, &item.labels)?;
        for (t, fs) in item.sequence.features.iter().enumerate() {
            for &f in fs {
                let row = &mut grad[f * l..(f + 1) * l];
                for (g, p) in row.iter_mut().zip(&m.position[t]) {
                    *g += p;
                }
                row[item.labels[t]] -= 1.0;
            }
        }
        let offset = self.state_weights.len();
        for (g, e) in grad[offset..].iter_mut().zip(&m.transitions) {
            *g += e;
        }
        for pair in item.labels.windows(2) {
            grad[offset + pair[0] * l + pair[1]] -= 1.0;
        }
        Ok(m.log_partition - gold)
    }
}

/// Versioned on-disk form of a [`CrfModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrfModelFile {
    pub version: u32,
    pub label_set: Vec<String>,
    pub feature_index: IndexMap<String, usize>,
    pub state_weights: Vec<Vec<f64>>,
    pub transition_weights: Vec<Vec<f64>>,
    pub l2_lambda: f64,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

impl From<&CrfModel> for CrfModelFile {
    fn from(m: &CrfModel) -> Self {
        let l = m.num_labels().max(1);
        CrfModelFile {
            version: MODEL_FORMAT_VERSION,
            label_set: m.label_set.clone(),
            feature_index: m.feature_index.clone(),
            state_weights: m.state_weights.chunks(l).map(<[f64]>::to_vec).collect(),
            transition_weights: m.transition_weights.chunks(l).map(<[f64]>::to_vec).collect(),
            l2_lambda: m.l2_lambda,
        }
    }
}

impl TryFrom<CrfModelFile> for CrfModel {
    type Error = CrfError;

    fn try_from(f: CrfModelFile) -> Result<Self, Self::Error> {
        if f.version != MODEL_FORMAT_VERSION {
            return Err(CrfError::Format(format!("unsupported version {}", f.version)));
        }
        let l = f.label_set.len();
        let nf = f.feature_index.len();
        if f.state_weights.len() != nf || f.state_weights.iter().any(|r| r.len() != l) {
            return Err(CrfError::Format("state weight matrix has the wrong shape".into()));
        }
        if f.transition_weights.len() != l || f.transition_weights.iter().any(|r| r.len() != l) {
            return Err(CrfError::Format("transition matrix has the wrong shape".into()));
        }
        let mut ids: Vec<usize> = f.feature_index.values().copied().collect();
        ids.sort_unstable();
        if ids.iter().enumerate().any(|(i, &id)| i != id) {
            return Err(CrfError::Format("feature ids are not 0..n".into()));
        }
        let model = CrfModel {
            label_set: f.label_set,
            feature_index: f.feature_index,
            state_weights: f.state_weights.concat(),
            transition_weights: f.transition_weights.concat(),
            l2_lambda: f.l2_lambda,
        };
        if !model.is_finite() {
            return Err(CrfError::Format("non-finite weight".into()));
        }
        Ok(model)
    }
}

impl CrfModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&CrfModelFile::from(self)).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, CrfError> {
        let file: CrfModelFile = serde_json::from_str(s).map_err(|e| CrfError::Format(e.to_string()))?;
        CrfModel::try_from(file)
    }
}
