//! Evaluation measures.
//!
//! ROUGE-1 and BLEU-4 between question pairs, gold-question recall of a
//! question pool at several similarity thresholds, answerability curves,
//! transcript coverage, and Krippendorff's alpha between two annotators.
//!
//! ```text
//! cargo run --release -p preme-core --example evaluate_metrics
//! ```

use indexmap::IndexMap;
use preme_core::evaluation::{
    annotator_agreement, answerability_from_confidences, bleu4, coverage_from_spans, coverage_table, gold_match,
    krippendorff_alpha, rouge1_f1, MatchMetric, ANSWERABILITY_THRESHOLDS,
};
use preme_core::providers::HashEmbedder;
use preme_core::transcript::{parse_annotations, Category};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reference = "What is the arrow symbol on the remote control for?";
    println!("reference: {reference}");
    for candidate in [
        "What is the arrow symbol on the remote control for?",
        "What is the arrow on the remote for?",
        "Why does the remote control have an arrow symbol?",
        "Who attended the budget meeting?",
    ] {
        println!(
            "  rouge1 {:.3}  bleu4 {:.3}  {candidate}",
            rouge1_f1(candidate, reference),
            bleu4(candidate, reference)
        );
    }

    let pool: Vec<String> = [
        "What is the arrow on the remote for?",
        "How much does the scroll wheel cost?",
        "What colors do young buyers prefer?",
    ]
    .map(String::from)
    .to_vec();
    let gold: Vec<String> = [
        "What is the arrow symbol on the remote control for?",
        "How much does the scroll wheel add to the unit cost?",
        "Why was speech recognition left out?",
    ]
    .map(String::from)
    .to_vec();
    let thresholds = [0.9, 0.7, 0.5, 0.3];
    println!("\nfraction of gold questions matched by the pool");
    for metric in [MatchMetric::Rouge1F1, MatchMetric::Bleu4, MatchMetric::EmbeddingCosine] {
        let r = gold_match(&pool, &gold, metric, &thresholds, Some(&HashEmbedder::default()))?;
        let row: Vec<String> = r
            .covered_fraction_at
            .iter()
            .map(|p| format!("@{} {:.2}", p.threshold, p.fraction))
            .collect();
        println!("  {:<16} {}", format!("{metric:?}"), row.join("  "));
    }

    let confidences: IndexMap<String, f64> = [("q1", 0.92), ("q2", 0.55), ("q3", 0.71), ("q4", 0.2), ("q5", 0.64)]
        .map(|(k, v)| (k.to_string(), v))
        .into();
    let ans = answerability_from_confidences(confidences, &ANSWERABILITY_THRESHOLDS);
    println!("\nanswerability");
    for p in &ans.fraction_ge {
        println!("  confidence >= {}: {:.0}%", p.threshold, 100.0 * p.fraction);
    }

    let spans: IndexMap<String, Vec<(usize, usize)>> =
        [("q1", vec![(0, 4)]), ("q2", vec![(2, 6), (10, 12)]), ("q3", vec![])]
            .map(|(k, v)| (k.to_string(), v))
            .into();
    let cov = coverage_from_spans("m", 20, spans);
    println!(
        "\ncoverage: {} of {} turns = {:.0}%",
        cov.covered_turns.len(),
        cov.total_turns,
        100.0 * cov.coverage
    );
    let table = coverage_table(&[
        (Category::Product, 0.55),
        (Category::Academic, 0.8),
        (Category::Product, 0.65),
    ]);
    println!("{table}");

    // nominal labels from three raters over four items
    let items = vec![
        vec!["a", "a", "a"],
        vec!["b", "b", "a"],
        vec!["c", "c", "c"],
        vec!["a", "b", "b"],
    ];
    let alpha = krippendorff_alpha(&items, |x, y| f64::from(u8::from(x != y)))?;
    println!("\nalpha on a toy table: {alpha:.4}");

    let a = parse_annotations(include_bytes!("../data/annotator_a.conll"))?.questions;
    let b = parse_annotations(include_bytes!("../data/annotator_b.conll"))?.questions;
    let agreement = annotator_agreement(&[a, b])?;
    println!(
        "two annotators, {} questions: subject alpha {:.3} hard / {:.3} soft, aspect alpha {:.3} hard / {:.3} soft",
        agreement.items,
        agreement.alpha_subject_hard,
        agreement.alpha_subject_soft,
        agreement.alpha_aspect_hard,
        agreement.alpha_aspect_soft
    );
    Ok(())
}
