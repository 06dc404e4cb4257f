//! L-BFGS training of a [`CrfModel`] with Armijo backtracking.

use std::collections::VecDeque;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{debug, warn};

use super::bio::BioLabel;
use super::crf::{CrfError, CrfModel, LabeledSequence};
use super::featurize;
use crate::transcript::AnnotatedQuestion;

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error(transparent)]
    Crf(#[from] CrfError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub l2_lambda: f64,
    pub max_iterations: usize,
    /// Stop once an accepted step improves the loss by less than this.
    pub convergence_tol: f64,
    pub seed: u64,
    /// Half-width of the uniform initial weights; 0 starts from all zeros.
    pub init_scale: f64,
    /// Number of curvature pairs kept by L-BFGS.
    pub history: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_lambda: 0.1,
            max_iterations: 200,
            convergence_tol: 1e-6,
            seed: 0,
            init_scale: 0.0,
            history: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Converged,
    MaxIterations,
    LineSearchFailed,
    ZeroGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Loss at the start and after every accepted step.
    pub loss_history: Vec<f64>,
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// Every gold label in the data is the same; the model will only ever
    /// predict that label.
    pub degenerate: bool,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        *self.loss_history.last().expect("history starts with the initial loss")
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fits the weights of `model` (whose label set and feature index are kept)
/// to `data`.
pub fn train_sequences(
    mut model: CrfModel,
    data: &[LabeledSequence],
    config: &TrainConfig,
) -> Result<(CrfModel, TrainReport), TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    model.l2_lambda = config.l2_lambda;

    let first = data[0].labels.first().copied();
    let degenerate = data.iter().all(|d| d.labels.iter().all(|&y| Some(y) == first));
    if degenerate {
        warn!("every gold label in the training set is identical");
    }

    let mut x: Vec<f64> = if config.init_scale > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        (0..model.num_params())
            .map(|_| rng.random_range(-config.init_scale..=config.init_scale))
            .collect()
    } else {
        vec![0.0; model.num_params()]
    };

    let eval = |params: &[f64], model: &mut CrfModel| {
        model.set_params(params);
        model.nll_and_gradient(data)
    };

    let (mut f, mut g) = eval(&x, &mut model)?;
    let mut history = vec![f];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm < 1e-10 {
            stop = StopReason::ZeroGradient;
            break;
        }

        // two-loop recursion for d = -H g
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = match pairs.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / gnorm,
        };
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
        for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            pairs.clear();
            d = g.iter().map(|v| -v / gnorm).collect();
            slope = dot(&g, &d);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let candidate: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            if let Ok((fc, gc)) = eval(&candidate, &mut model) {
                if fc.is_finite() && fc <= f + 1e-4 * step * slope {
                    accepted = Some((candidate, fc, gc));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            stop = StopReason::LineSearchFailed;
            break;
        };

        iterations += 1;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            if pairs.len() == config.history.max(1) {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        let improvement = f - f_new;
        x = x_new;
        f = f_new;
        g = g_new;
        history.push(f);
        debug!(iterations, loss = f, "accepted step");
        if improvement < config.convergence_tol {
            stop = StopReason::Converged;
            break;
        }
    }

    model.set_params(&x);
    Ok((
        model,
        TrainReport {
            loss_history: history,
            iterations,
            stop_reason: stop,
            degenerate,
        },
    ))
}

/// Label strings of the tagger's BIO label set, in label-id order.
pub fn bio_label_set() -> Vec<String> {
    BioLabel::ALL.iter().map(|l| l.as_str().to_string()).collect()
}

/// Feature index over every feature that fires in `questions`, in order of
/// first occurrence.
pub fn build_feature_index(questions: &[AnnotatedQuestion]) -> IndexMap<String, usize> {
    let mut index = IndexMap::new();
    for q in questions {
        for fs in featurize(&q.tokens, &q.pos) {
            for f in fs {
                let next = index.len();
                index.entry(f).or_insert(next);
            }
        }
    }
    index
}

pub fn to_sequences(model: &CrfModel, questions: &[AnnotatedQuestion]) -> Vec<LabeledSequence> {
    questions
        .iter()
        .filter(|q| !q.is_empty())
        .map(|q| LabeledSequence {
            sequence: model.featurize(&featurize(&q.tokens, &q.pos)),
            labels: q.labels.iter().map(|l| l.id()).collect(),
        })
        .collect()
}

/// Trains a BIO tagger model on annotated questions.
pub fn train(questions: &[AnnotatedQuestion], config: &TrainConfig) -> Result<(CrfModel, TrainReport), TrainError> {
    if questions.iter().all(|q| q.is_empty()) {
        return Err(TrainError::EmptyDataset);
    }
    let model = CrfModel::new(bio_label_set(), build_feature_index(questions), config.l2_lambda);
    let data = to_sequences(&model, questions);
    train_sequences(model, &data, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagger::crf::Sequence;

    /// Label 1 exactly where feature 0 fires, otherwise label 0.
    fn toy(n: usize, seed: u64) -> Vec<LabeledSequence> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let len = rng.random_range(2..7);
                let mut feats = Vec::new();
                let mut labels = Vec::new();
                for _ in 0..len {
                    let red = rng.random_bool(0.3);
                    let mut f = vec![rng.random_range(1..6)];
                    if red {
                        f.push(0);
                    }
                    feats.push(f);
                    labels.push(usize::from(red));
                }
                LabeledSequence {
                    sequence: Sequence::new(feats),
                    labels,
                }
            })
            .collect()
    }

    #[test]
    fn learns_single_feature_rule_and_loss_never_rises() {
        let data = toy(100, 1);
        let (model, report) =
            train_sequences(CrfModel::with_dimensions(2, 6, 0.0), &data, &TrainConfig::default()).unwrap();
        for w in report.loss_history.windows(2) {
            assert!(w[1] <= w[0]);
        }
        for item in toy(50, 2) {
            assert_eq!(model.viterbi(&item.sequence).unwrap().0, item.labels);
        }
        assert!(model.is_finite());
    }

    #[test]
    fn deterministic_for_same_seed() {
        let data = toy(40, 3);
        let cfg = TrainConfig {
            init_scale: 0.1,
            seed: 9,
            ..TrainConfig::default()
        };
        let a = train_sequences(CrfModel::with_dimensions(2, 6, 0.0), &data, &cfg).unwrap();
        let b = train_sequences(CrfModel::with_dimensions(2, 6, 0.0), &data, &cfg).unwrap();
        assert_eq!(a.1.loss_history.len(), b.1.loss_history.len());
        assert!((a.1.final_loss() - b.1.final_loss()).abs() < 1e-12);
        assert_eq!(a.0, b.0);
    }

    #[test]
    fn empty_and_degenerate() {
        let m = CrfModel::with_dimensions(2, 2, 0.0);
        assert_eq!(
            train_sequences(m.clone(), &[], &TrainConfig::default()).unwrap_err(),
            TrainError::EmptyDataset
        );
        assert_eq!(
            train(&[], &TrainConfig::default()).unwrap_err(),
            TrainError::EmptyDataset
        );
        let data = vec![LabeledSequence {
            sequence: Sequence::new(vec![vec![0], vec![1]]),
            labels: vec![0, 0],
        }];
        let (model, report) = train_sequences(m, &data, &TrainConfig::default()).unwrap();
        assert!(report.degenerate);
        assert!(model.is_finite());
    }
}
