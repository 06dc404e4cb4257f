//! k-fold cross-validation with token-level scores per collapsed class.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::bio::{BioLabel, SpanClass};
use super::train::{train, TrainConfig, TrainError};
use super::Tagger;
use crate::transcript::AnnotatedQuestion;

#[derive(Debug, Error, PartialEq)]
pub enum CvError {
    #[error("need at least {k} questions for {k}-fold validation, got {found}")]
    InsufficientData { k: usize, found: usize },
    #[error(transparent)]
    Train(#[from] TrainError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// A class absent from both gold and predictions scores 1 throughout.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Prf {
        if tp + fp + fn_ == 0 {
            return Prf {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            };
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf { precision, recall, f1 }
    }
}

/// Token-level scores of predicted against gold labels, per collapsed class.
pub fn class_scores(gold: &[Vec<BioLabel>], predicted: &[Vec<BioLabel>]) -> BTreeMap<SpanClass, Prf> {
    let mut counts: BTreeMap<SpanClass, (usize, usize, usize)> = BTreeMap::new();
    for (g, p) in gold.iter().zip(predicted) {
        for (a, b) in g.iter().zip(p) {
            let (gc, pc) = (a.class(), b.class());
            if gc == pc {
                counts.entry(gc).or_default().0 += 1;
            } else {
                counts.entry(pc).or_default().1 += 1;
                counts.entry(gc).or_default().2 += 1;
            }
        }
    }
    SpanClass::ALL
        .iter()
        .map(|&c| {
            let (tp, fp, fn_) = counts.get(&c).copied().unwrap_or_default();
            (c, Prf::from_counts(tp, fp, fn_))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub size: usize,
    pub scores: BTreeMap<SpanClass, Prf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldResult>,
    /// Per-class scores averaged over folds.
    pub mean: BTreeMap<SpanClass, Prf>,
}

/// Sizes of `k` contiguous folds over `n` items; the first `n % k` folds
/// get one extra item.
pub fn fold_sizes(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|i| n / k + usize::from(i < n % k)).collect()
}

/// Shuffles with `seed`, splits into `k` contiguous folds, trains on k−1 and
/// scores on the held-out fold.
pub fn cross_validate(
    dataset: &[AnnotatedQuestion],
    k: usize,
    config: &TrainConfig,
    seed: u64,
) -> Result<CvReport, CvError> {
    if k < 2 || dataset.len() < k {
        return Err(CvError::InsufficientData {
            k,
            found: dataset.len(),
        });
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for size in fold_sizes(dataset.len(), k) {
        let held: &[usize] = &order[start..start + size];
        let train_set: Vec<AnnotatedQuestion> = order[..start]
            .iter()
            .chain(&order[start + size..])
            .map(|&i| dataset[i].clone())
            .collect();
        start += size;

        let (model, _) = train(&train_set, config)?;
        let tagger = Tagger::new(model).expect("trained model has the BIO label set");
        let mut gold = Vec::new();
        let mut predicted = Vec::new();
        for &i in held {
            let q = &dataset[i];
            if q.is_empty() {
                continue;
            }
            let result = tagger.tag(&q.tokens, &q.pos).map_err(TrainError::from)?;
            gold.push(q.labels.clone());
            predicted.push(result.labels);
        }
        folds.push(FoldResult {
            size,
            scores: class_scores(&gold, &predicted),
        });
    }

    let mean = SpanClass::ALL
        .iter()
        .map(|&c| {
            let n = folds.len() as f64;
            let sum = folds.iter().fold(Prf::default(), |acc, f| {
                let s = f.scores[&c];
                Prf {
                    precision: acc.precision + s.precision,
                    recall: acc.recall + s.recall,
                    f1: acc.f1 + s.f1,
                }
            });
            (
                c,
                Prf {
                    precision: sum.precision / n,
                    recall: sum.recall / n,
                    f1: sum.f1 / n,
                },
            )
        })
        .collect();
    Ok(CvReport { folds, mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use BioLabel::*;

    fn q1() -> AnnotatedQuestion {
        let toks = "What is the arrow symbol on the remote control for ?";
        let pos = "WP VBZ DT NN NN IN DT NN NN IN .";
        AnnotatedQuestion::new(
            toks.split(' ').map(String::from).collect(),
            pos.split(' ').map(String::from).collect(),
            vec![O, O, O, BAsp, IAsp, O, O, BSubj, ISubj, O, O],
        )
    }

    #[test]
    fn fold_arithmetic() {
        assert_eq!(fold_sizes(1000, 10), vec![100; 10]);
        assert_eq!(fold_sizes(12, 5), vec![3, 3, 2, 2, 2]);
    }

    #[test]
    fn identical_sequences_score_perfectly() {
        let data = vec![q1(); 10];
        let report = cross_validate(&data, 5, &TrainConfig::default(), 0).unwrap();
        for c in SpanClass::ALL {
            assert!((report.mean[&c].f1 - 1.0).abs() < 1e-12, "{c:?}");
        }
        assert_eq!(report.folds.iter().map(|f| f.size).sum::<usize>(), 10);
    }

    #[test]
    fn too_few_items() {
        assert_eq!(
            cross_validate(&[q1()], 10, &TrainConfig::default(), 0).unwrap_err(),
            CvError::InsufficientData { k: 10, found: 1 }
        );
    }

    #[test]
    fn class_scores_counting() {
        let gold = vec![vec![BSubj, ISubj, O, BAsp]];
        let pred = vec![vec![BSubj, O, O, BAsp]];
        let s = class_scores(&gold, &pred);
        assert_eq!(s[&SpanClass::Aspect].f1, 1.0);
        assert!((s[&SpanClass::Subject].recall - 0.5).abs() < 1e-12);
        assert_eq!(s[&SpanClass::Subject].precision, 1.0);
        assert!((s[&SpanClass::NotApplicable].precision - 0.5).abs() < 1e-12);
    }
}
