//! Subject normalization with weighted PageRank.
//!
//! Every distinct subject extracted from a segment's questions becomes a
//! node; edges carry the cosine similarity of the subject embeddings.
//! PageRank picks the most central subject, subjects similar enough to it
//! are merged in, and the aspects of the merged questions are collected and
//! deduplicated by word-bigram overlap.
//!
//! The embeddings below are hand-made so the result is easy to follow:
//! coordinate 0 measures how much a phrase is about education.
//!
//! ```text
//! cargo run -p preme-core --example subject_network
//! ```

use preme_core::providers::StaticEmbedder;
use preme_core::subject_network::{normalize_segment, NormalizationConfig};
use preme_core::tagger::TaggedQuestion;

fn question(id: &str, text: &str, subjects: &[&str], aspects: &[&str]) -> TaggedQuestion {
    TaggedQuestion {
        question_id: id.into(),
        segment_id: "committee#seg-1".into(),
        text: text.into(),
        tokens: vec![],
        labels: vec![],
        subjects: subjects.iter().map(|s| s.to_string()).collect(),
        aspects: aspects.iter().map(|s| s.to_string()).collect(),
        provenance_count: 1,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let embedder = StaticEmbedder::new([
        ("education", vec![1.0, 0.3, 0.3, 0.3, 0.2, 0.0]),
        ("schools", vec![0.7, 1.0, 0.0, 0.0, 0.2, 0.0]),
        ("statutory education", vec![0.8, 0.0, 1.0, 0.0, 0.0, 0.0]),
        ("post 12 education", vec![0.8, 0.0, 0.0, 1.0, 0.0, 0.0]),
        ("school setting", vec![0.9, 0.6, 0.0, 0.0, 0.4, 0.0]),
        ("education and skills committee", vec![0.8, 0.0, 0.1, 0.0, 0.6, 0.3]),
        ("weather", vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
    ]);
    let tagged = vec![
        question("q1", "What is the role of education?", &["Education"], &["role"]),
        question(
            "q2",
            "How is the funding of schools decided?",
            &["schools"],
            &["funding"],
        ),
        question(
            "q3",
            "What was said about statutory education?",
            &["statutory education"],
            &[],
        ),
        question(
            "q4",
            "What are the challenges in post 12 education?",
            &["post 12 education"],
            &["challenges"],
        ),
        question(
            "q5",
            "What challenges exist in the school setting?",
            &["school setting"],
            &["challenges"],
        ),
        question(
            "q6",
            "Who are the members of the Education and Skills Committee?",
            &["Education and Skills Committee"],
            &["members"],
        ),
        question("q7", "What is the weather forecast?", &["weather"], &["forecast"]),
    ];

    for merge_threshold in [0.7, 0.9] {
        let config = NormalizationConfig {
            merge_threshold,
            ..NormalizationConfig::default()
        };
        let result =
            normalize_segment("committee#seg-1", &tagged, &embedder, &config)?.expect("the questions have subjects");
        println!("merge threshold {merge_threshold}");
        println!("  PageRank (converged: {}):", result.pagerank_converged);
        let mut scores = result.pagerank_scores.clone();
        scores.sort_by(|a, b| b.score.total_cmp(&a.score));
        for s in &scores {
            println!("    {:.4}  {}", s.score, s.subject);
        }
        println!("  normalized subject: {}", result.s_norm.subject_text);
        let merged: Vec<&str> = result.merged_subjects.iter().map(|n| n.subject_text.as_str()).collect();
        println!("  merged: {merged:?}");
        for (aspect, ids) in &result.aspect_map {
            println!("    {aspect:<12} {ids:?}");
        }
        println!();
    }
    Ok(())
}
