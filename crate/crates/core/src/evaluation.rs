//! Automatic evaluation: coverage of the transcript by located answers,
//! answerability under a QA provider, similarity matching against gold
//! questions (ROUGE-1, BLEU-4, embedding cosine) and Krippendorff's alpha
//! between annotators.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::providers::{content_tokens, EmbeddingProvider, LocatorProvider, ProviderError, QaProvider, TurnRange};
use crate::questionnaire::Questionnaire;
use crate::segmentation::cosine;
use crate::transcript::{is_punctuation, tokenize, AnnotatedQuestion, Category, Transcript};

#[derive(Debug, Error, PartialEq)]
pub enum EvaluationError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("agreement needs at least two items rated by two or more annotators")]
    InsufficientOverlap,
    #[error("gold question list is empty")]
    EmptyGold,
    #[error("embedding similarity needs an embedding provider")]
    MissingEmbedder,
}

// ---------------------------------------------------------------- coverage

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub meeting_id: String,
    pub total_turns: usize,
    pub covered_turns: BTreeSet<usize>,
    pub coverage: f64,
    pub per_question_spans: IndexMap<String, Vec<TurnRange>>,
}

/// Coverage of `total_turns` turns by the union of the given ranges. Ranges
/// are clipped to the transcript.
pub fn coverage_from_spans(
    meeting_id: &str,
    total_turns: usize,
    per_question_spans: IndexMap<String, Vec<TurnRange>>,
) -> CoverageReport {
    let covered_turns: BTreeSet<usize> = per_question_spans
        .values()
        .flatten()
        .flat_map(|&(s, e)| s.min(total_turns)..e.min(total_turns))
        .collect();
    let coverage = if total_turns == 0 {
        0.0
    } else {
        covered_turns.len() as f64 / total_turns as f64
    };
    CoverageReport {
        meeting_id: meeting_id.to_string(),
        total_turns,
        covered_turns,
        coverage,
        per_question_spans,
    }
}

/// Locates every questionnaire question and reports the fraction of turns
/// inside at least one located range.
pub fn coverage(
    questionnaire: &Questionnaire,
    transcript: &Transcript,
    locator: &dyn LocatorProvider,
) -> Result<CoverageReport, EvaluationError> {
    let turns = transcript.turn_texts();
    let located: Vec<Result<(String, Vec<TurnRange>), ProviderError>> = questionnaire
        .questions
        .par_iter()
        .map(|(id, q)| Ok((id.clone(), locator.locate(&q.text, &turns)?)))
        .collect();
    let spans = located.into_iter().collect::<Result<IndexMap<_, _>, _>>()?;
    Ok(coverage_from_spans(&transcript.meeting_id, transcript.len(), spans))
}

// ----------------------------------------------------------------- locator

/// IDF-overlap answer locator.
///
/// Each turn scores the summed `ln(N / df)` of the distinct question content
/// tokens it contains. The `k` best turns (earlier turn on ties) are widened
/// by one turn on each side and overlapping ranges merged.
pub fn baseline_locate(question: &str, turns: &[String], k: usize) -> Vec<TurnRange> {
    let n = turns.len();
    if n == 0 || k == 0 {
        return vec![];
    }
    let turn_tokens: Vec<HashSet<String>> = turns.iter().map(|t| content_tokens(t).into_iter().collect()).collect();
    let mut df: HashMap<&str, usize> = HashMap::new();
    for set in &turn_tokens {
        for t in set {
            *df.entry(t.as_str()).or_default() += 1;
        }
    }
    let query: BTreeSet<String> = content_tokens(question).into_iter().collect();
    let idf = |t: &str| df.get(t).map_or(0.0, |&d| (n as f64 / d as f64).ln());
    let scores: Vec<f64> = turn_tokens
        .iter()
        .map(|set| query.iter().filter(|t| set.contains(*t)).map(|t| idf(t)).sum())
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut ranges: Vec<TurnRange> = order[..k.min(n)]
        .iter()
        .map(|&i| (i.saturating_sub(1), (i + 2).min(n)))
        .collect();
    ranges.sort_unstable();
    let mut merged: Vec<TurnRange> = Vec::new();
    for (s, e) in ranges {
        match merged.last_mut() {
            Some(last) if s < last.1 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    merged
}

/// [`baseline_locate`] as a provider.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LexicalLocator {
    pub k: usize,
}

impl Default for LexicalLocator {
    fn default() -> Self {
        LexicalLocator { k: 2 }
    }
}

impl LocatorProvider for LexicalLocator {
    fn locate(&self, question: &str, turns: &[String]) -> Result<Vec<TurnRange>, ProviderError> {
        Ok(baseline_locate(question, turns, self.k))
    }
}

// ----------------------------------------------------------- answerability

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerabilityReport {
    pub per_question_confidence: IndexMap<String, f64>,
    pub fraction_ge: Vec<CurvePoint>,
    /// Counts over ten equal-width confidence bins; 1.0 falls in the last.
    pub histogram: Vec<usize>,
}

pub const ANSWERABILITY_THRESHOLDS: [f64; 2] = [0.5, 0.7];

/// Fraction of `values` that are ≥ each threshold. Empty input gives 0.
pub fn fraction_ge(values: &[f64], thresholds: &[f64]) -> Vec<CurvePoint> {
    thresholds
        .iter()
        .map(|&threshold| CurvePoint {
            threshold,
            fraction: if values.is_empty() {
                0.0
            } else {
                values.iter().filter(|&&v| v >= threshold).count() as f64 / values.len() as f64
            },
        })
        .collect()
}

pub fn histogram(values: &[f64], bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins];
    for &v in values {
        let b = ((v.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
}

pub fn answerability_from_confidences(
    per_question_confidence: IndexMap<String, f64>,
    thresholds: &[f64],
) -> AnswerabilityReport {
    let values: Vec<f64> = per_question_confidence.values().copied().collect();
    AnswerabilityReport {
        fraction_ge: fraction_ge(&values, thresholds),
        histogram: histogram(&values, 10),
        per_question_confidence,
    }
}

/// Asks the QA provider each `(id, text)` question against the whole
/// transcript.
pub fn answerability(
    questions: &[(String, String)],
    transcript: &Transcript,
    qa: &dyn QaProvider,
) -> Result<AnswerabilityReport, EvaluationError> {
    let context = transcript.full_text();
    let answers: Vec<Result<(String, f64), ProviderError>> = questions
        .par_iter()
        .map(|(id, text)| {
            let a = qa.answer(text, &context)?;
            if !(0.0..=1.0).contains(&a.confidence) {
                return Err(ProviderError::BadResponse(format!(
                    "confidence {} outside [0, 1]",
                    a.confidence
                )));
            }
            Ok((id.clone(), a.confidence))
        })
        .collect();
    let confidences = answers.into_iter().collect::<Result<IndexMap<_, _>, _>>()?;
    Ok(answerability_from_confidences(confidences, &ANSWERABILITY_THRESHOLDS))
}

// ---------------------------------------------------------- text metrics

/// Casefolded tokens with punctuation removed.
pub fn metric_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| !is_punctuation(t))
        .map(|t| t.to_lowercase())
        .collect()
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    for w in tokens.windows(n) {
        *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_default() += 1;
    }
    counts
}

fn clipped_matches<S: AsRef<str>>(candidate: &[S], reference: &[S], n: usize) -> usize {
    let refc = ngram_counts(reference, n);
    ngram_counts(candidate, n)
        .iter()
        .map(|(g, &c)| c.min(refc.get(g).copied().unwrap_or(0)))
        .sum()
}

/// ROUGE-1 F1 over already-normalized tokens.
pub fn rouge1_f1_tokens<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let m = clipped_matches(candidate, reference, 1) as f64;
    if m == 0.0 {
        return 0.0;
    }
    let p = m / candidate.len() as f64;
    let r = m / reference.len() as f64;
    2.0 * p * r / (p + r)
}

pub fn rouge1_f1(candidate: &str, reference: &str) -> f64 {
    rouge1_f1_tokens(&metric_tokens(candidate), &metric_tokens(reference))
}

/// Sentence BLEU-4 with uniform weights.
///
/// An order with no clipped matches uses `1 / (c + 1)` in place of its
/// precision, where `c` is the number of candidate n-grams of that order.
/// Fully disjoint strings therefore score
/// `(∏ 1/(len−n+2))^(1/4) · BP`, which is about 0.23 for five tokens and
/// drops below 0.05 once both sides have 25 or more tokens.
pub fn bleu4(candidate: &str, reference: &str) -> f64 {
    let c = metric_tokens(candidate);
    let r = metric_tokens(reference);
    if c.is_empty() || r.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let total = c.len().saturating_sub(n - 1);
        let matches = clipped_matches(&c, &r, n);
        let p = if matches > 0 {
            matches as f64 / total as f64
        } else {
            1.0 / (total as f64 + 1.0)
        };
        log_sum += p.ln();
    }
    let bp = if c.len() > r.len() {
        1.0
    } else {
        (1.0 - r.len() as f64 / c.len() as f64).exp()
    };
    (bp * (log_sum / 4.0).exp()).clamp(0.0, 1.0)
}

// ------------------------------------------------------------- gold match

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatchMetric {
    EmbeddingCosine,
    Rouge1F1,
    Bleu4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub metric: MatchMetric,
    /// Best similarity over the pool, per gold question.
    pub max_similarity: Vec<f64>,
    pub covered_fraction_at: Vec<CurvePoint>,
}

/// 1.0, 0.9, …, 0.0.
pub fn default_thresholds() -> Vec<f64> {
    (0..=10).rev().map(|i| i as f64 / 10.0).collect()
}

/// Gold question `g` counts as covered at threshold `t` when some pooled
/// question has similarity ≥ `t` with it.
pub fn gold_match_from_max(metric: MatchMetric, max_similarity: Vec<f64>, thresholds: &[f64]) -> MatchReport {
    MatchReport {
        metric,
        covered_fraction_at: fraction_ge(&max_similarity, thresholds),
        max_similarity,
    }
}

pub fn gold_match(
    pool: &[String],
    gold: &[String],
    metric: MatchMetric,
    thresholds: &[f64],
    embedder: Option<&dyn EmbeddingProvider>,
) -> Result<MatchReport, EvaluationError> {
    if gold.is_empty() {
        return Err(EvaluationError::EmptyGold);
    }
    let max_similarity: Vec<f64> = match metric {
        MatchMetric::Rouge1F1 | MatchMetric::Bleu4 => {
            let f = if metric == MatchMetric::Rouge1F1 {
                rouge1_f1
            } else {
                bleu4
            };
            gold.par_iter()
                .map(|g| pool.iter().map(|p| f(p, g)).fold(0.0, f64::max))
                .collect()
        }
        MatchMetric::EmbeddingCosine => {
            let embedder = embedder.ok_or(EvaluationError::MissingEmbedder)?;
            let gv = embedder.embed(gold)?;
            let pv = if pool.is_empty() { vec![] } else { embedder.embed(pool)? };
            gv.iter()
                .map(|g| pv.iter().map(|p| cosine(g, p)).fold(0.0, f64::max))
                .collect()
        }
    };
    Ok(gold_match_from_max(metric, max_similarity, thresholds))
}

// -------------------------------------------------------------- agreement

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Distance {
    /// 0 iff the span lists are equal.
    Hard,
    /// 0 iff the spans share a token, or both annotators marked nothing.
    Soft,
}

/// Spans one annotator marked on one question, as normalized token lists.
pub type SpanValue = Vec<Vec<String>>;

pub fn span_distance(a: &SpanValue, b: &SpanValue, distance: Distance) -> f64 {
    let differs = match distance {
        Distance::Hard => a != b,
        Distance::Soft => {
            if a.is_empty() && b.is_empty() {
                false
            } else {
                let ta: HashSet<&String> = a.iter().flatten().collect();
                !b.iter().flatten().any(|t| ta.contains(t))
            }
        }
    };
    if differs {
        1.0
    } else {
        0.0
    }
}

/// Krippendorff's alpha from pairwise disagreements.
///
/// `items[u]` holds the values assigned to item `u` by whichever annotators
/// rated it. Only items with two or more values count.
pub fn krippendorff_alpha<V>(items: &[Vec<V>], delta: impl Fn(&V, &V) -> f64) -> Result<f64, EvaluationError> {
    let pairable: Vec<&Vec<V>> = items.iter().filter(|u| u.len() >= 2).collect();
    if pairable.len() < 2 {
        return Err(EvaluationError::InsufficientOverlap);
    }
    let values: Vec<&V> = pairable.iter().flat_map(|u| u.iter()).collect();
    let n = values.len() as f64;

    let mut observed = 0.0;
    for u in &pairable {
        let mut within = 0.0;
        for (i, a) in u.iter().enumerate() {
            for (j, b) in u.iter().enumerate() {
                if i != j {
                    within += delta(a, b);
                }
            }
        }
        observed += within / (u.len() as f64 - 1.0);
    }
    observed /= n;
    if observed == 0.0 {
        return Ok(1.0);
    }

    let mut expected = 0.0;
    for (i, a) in values.iter().enumerate() {
        for (j, b) in values.iter().enumerate() {
            if i != j {
                expected += delta(a, b);
            }
        }
    }
    expected /= n * (n - 1.0);
    Ok(1.0 - observed / expected)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub alpha_subject_hard: f64,
    pub alpha_aspect_hard: f64,
    pub alpha_subject_soft: f64,
    pub alpha_aspect_soft: f64,
    pub items: usize,
}

fn span_value(spans: Vec<String>) -> SpanValue {
    let mut v: SpanValue = spans.iter().map(|s| metric_tokens(s)).collect();
    v.sort();
    v
}

/// Agreement between annotators who labelled the same questions in the same
/// order. A shorter annotation list leaves the trailing items unrated by that
/// annotator.
pub fn annotator_agreement(annotators: &[Vec<AnnotatedQuestion>]) -> Result<AgreementReport, EvaluationError> {
    let items = annotators.iter().map(Vec::len).max().unwrap_or(0);
    let collect = |subjects: bool| -> Vec<Vec<SpanValue>> {
        (0..items)
            .map(|u| {
                annotators
                    .iter()
                    .filter_map(|a| a.get(u))
                    .map(|q| span_value(if subjects { q.subject_texts() } else { q.aspect_texts() }))
                    .collect()
            })
            .collect()
    };
    let subjects = collect(true);
    let aspects = collect(false);
    let alpha = |data: &[Vec<SpanValue>], d: Distance| krippendorff_alpha(data, |a, b| span_distance(a, b, d));
    Ok(AgreementReport {
        alpha_subject_hard: alpha(&subjects, Distance::Hard)?,
        alpha_aspect_hard: alpha(&aspects, Distance::Hard)?,
        alpha_subject_soft: alpha(&subjects, Distance::Soft)?,
        alpha_aspect_soft: alpha(&aspects, Distance::Soft)?,
        items: subjects.iter().filter(|u| u.len() >= 2).count(),
    })
}

// ---------------------------------------------------------------- reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub meeting_id: String,
    pub category: Category,
    pub coverage: CoverageReport,
    pub answerability: AnswerabilityReport,
    #[serde(default)]
    pub gold_match: Vec<MatchReport>,
}

/// Plain-text coverage table: one row, with the mean over all meetings and
/// over each category. Categories without meetings show "-".
pub fn coverage_table(reports: &[(Category, f64)]) -> String {
    let mut by_cat: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (c, v) in reports {
        by_cat.entry(c.as_str()).or_default().push(*v);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let cell = |v: Option<&Vec<f64>>| match v {
        Some(v) if !v.is_empty() => format!("{:.2}", 100.0 * mean(v)),
        _ => "-".to_string(),
    };
    let all: Vec<f64> = reports.iter().map(|r| r.1).collect();
    let columns = ["All", "Academic", "Committee", "Product"];
    let values = [
        cell(Some(&all)),
        cell(by_cat.get("Academic")),
        cell(by_cat.get("Committee")),
        cell(by_cat.get("Product")),
    ];
    let header = std::iter::once("".to_string())
        .chain(columns.iter().map(|c| format!("{c:>10}")))
        .collect::<String>();
    let row = std::iter::once("Coverage (%)".to_string())
        .chain(values.iter().map(|v| format!("{v:>10}")))
        .collect::<String>();
    format!("{:<12}{}\n{}\n", "", header, row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transcript::Transcript;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn rouge_examples() {
        assert_eq!(rouge1_f1("What is the budget?", "what is the budget"), 1.0);
        assert_eq!(rouge1_f1("alpha beta", "gamma delta"), 0.0);
        assert!((rouge1_f1("a b c", "a b d") - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(rouge1_f1("", "a"), 0.0);
    }

    #[test]
    fn bleu_examples() {
        assert!((bleu4("the cat sat on the mat", "the cat sat on the mat") - 1.0).abs() < 1e-12);
        let long_a: Vec<String> = (0..30).map(|i| format!("a{i}")).collect();
        let long_b: Vec<String> = (0..30).map(|i| format!("b{i}")).collect();
        assert!(bleu4(&long_a.join(" "), &long_b.join(" ")) < 0.05);
        assert!(bleu4("a b c d e", "f g h i j") > 0.0);
    }

    #[test]
    fn locator_widening_and_degenerate_case() {
        let turns: Vec<String> = (0..10)
            .map(|i| {
                if i == 7 {
                    "the marmalade plan".into()
                } else {
                    format!("turn talk {i}")
                }
            })
            .collect();
        assert_eq!(baseline_locate("What about marmalade?", &turns, 1), vec![(6, 9)]);
        assert_eq!(baseline_locate("zzz?", &turns, 2), vec![(0, 3)]);
        assert_eq!(baseline_locate("zzz?", &turns[..1], 3), vec![(0, 1)]);
    }

    #[test]
    fn answerability_counting() {
        let conf: IndexMap<String, f64> = [("a", 0.2), ("b", 0.6), ("c", 0.8)]
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        let r = answerability_from_confidences(conf, &ANSWERABILITY_THRESHOLDS);
        assert!((r.fraction_ge[0].fraction - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.fraction_ge[1].fraction - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.histogram.iter().sum::<usize>(), 3);
    }

    #[test]
    fn gold_match_counting() {
        let r = gold_match_from_max(MatchMetric::Rouge1F1, vec![0.8, 0.3], &[0.5]);
        assert_eq!(r.covered_fraction_at[0].fraction, 0.5);
        let gold = strings(&["What is the budget?", "Who leads the design?"]);
        let r = gold_match(&gold, &gold, MatchMetric::Bleu4, &default_thresholds(), None).unwrap();
        assert!(r.covered_fraction_at.iter().all(|p| p.fraction == 1.0));
        let r = gold_match(&[], &gold, MatchMetric::Rouge1F1, &default_thresholds(), None).unwrap();
        assert!(r
            .covered_fraction_at
            .iter()
            .all(|p| p.threshold == 0.0 || p.fraction == 0.0));
        assert_eq!(
            gold_match(&[], &[], MatchMetric::Rouge1F1, &[0.5], None).unwrap_err(),
            EvaluationError::EmptyGold
        );
        assert_eq!(
            gold_match(&gold, &gold, MatchMetric::EmbeddingCosine, &[0.5], None).unwrap_err(),
            EvaluationError::MissingEmbedder
        );
    }

    #[test]
    fn alpha_perfect_and_insufficient() {
        let items = vec![vec![1, 1], vec![2, 2], vec![3, 3]];
        assert_eq!(krippendorff_alpha(&items, |a, b| f64::from(a != b)).unwrap(), 1.0);
        assert_eq!(
            krippendorff_alpha(&[vec![1, 2], vec![1]], |a: &i32, b| f64::from(a != b)).unwrap_err(),
            EvaluationError::InsufficientOverlap
        );
    }

    #[test]
    fn soft_distance_rules() {
        let v = |s: &[&[&str]]| -> SpanValue { s.iter().map(|x| strings(x)).collect() };
        assert_eq!(span_distance(&v(&[]), &v(&[]), Distance::Soft), 0.0);
        assert_eq!(
            span_distance(&v(&[&["remote", "control"]]), &v(&[&["remote"]]), Distance::Soft),
            0.0
        );
        assert_eq!(
            span_distance(&v(&[&["remote", "control"]]), &v(&[&["remote"]]), Distance::Hard),
            1.0
        );
        assert_eq!(span_distance(&v(&[&["x"]]), &v(&[]), Distance::Soft), 1.0);
    }

    #[test]
    fn coverage_union() {
        let spans: IndexMap<String, Vec<TurnRange>> = [
            ("q1".to_string(), vec![(0, 3)]),
            ("q2".to_string(), vec![(2, 5), (8, 20)]),
        ]
        .into_iter()
        .collect();
        let r = coverage_from_spans("m", 10, spans);
        assert_eq!(r.covered_turns.len(), 7);
        assert!((r.coverage - 0.7).abs() < 1e-15);
        assert_eq!(coverage_from_spans("m", 10, IndexMap::new()).coverage, 0.0);
    }

    #[test]
    fn transcript_wide_locator_covers_everything() {
        struct Everything;
        impl LocatorProvider for Everything {
            fn locate(&self, _: &str, turns: &[String]) -> Result<Vec<TurnRange>, ProviderError> {
                Ok(vec![(0, turns.len())])
            }
        }
        let t = Transcript::new("m", Category::Other, [("A", "hello"), ("B", "there"), ("A", "bye")]).unwrap();
        let mut q = Questionnaire::empty("m");
        q.questions.insert(
            "q1".into(),
            crate::questionnaire::QuestionRecord {
                text: "What?".into(),
                segment_id: "m#seg-1".into(),
                answer_span: None,
                provenance_count: 1,
            },
        );
        assert_eq!(coverage(&q, &t, &Everything).unwrap().coverage, 1.0);
    }

    #[test]
    fn table_layout() {
        let t = coverage_table(&[(Category::Product, 0.8), (Category::Academic, 0.6)]);
        assert!(t.contains("Coverage (%)"));
        assert!(t.contains("70.00"));
        assert!(t.contains("80.00"));
        assert!(t.lines().nth(1).unwrap().trim_end().ends_with("80.00"));
    }
}
