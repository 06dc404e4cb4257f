//! Runs the whole pipeline on the bundled demo meeting with offline providers
//! and prints what each stage produced.
//!
//! ```text
//! cargo run --release -p preme-core --example run_pipeline [OUTPUT_DIR]
//! ```
//!
//! Running it twice shows the resume behaviour: the second run reuses every
//! stored artifact.

use std::path::PathBuf;
use std::time::Instant;

use preme_core::pipeline::{self, Workspace};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("preme-demo"));
    let started = Instant::now();
    let outcome = pipeline::demo(&out)?;
    let job = &outcome.job;
    println!(
        "job {} attempt {} finished as {:?} in {:.2?}",
        job.job_id,
        job.attempt,
        job.stage,
        started.elapsed()
    );
    if !job.skipped.is_empty() {
        println!("reused artifacts for {:?}", job.skipped);
    }
    for (name, path) in &job.artifacts {
        println!("  {name:<14} {}", path.display());
    }
    for w in &job.warnings {
        println!("  warning: {w}");
    }

    let ws = Workspace::new(&out);
    let q = ws.load_questionnaire(&job.meeting_id)?;
    println!("\n{} subjects, {} questions", q.entries.len(), q.questions.len());
    for e in &q.entries {
        println!("- {} [{}]", e.subject, e.segment_id);
        for a in &e.aspects {
            println!("    {} ({} questions)", a.aspect, a.question_ids.len());
        }
    }

    let r = ws.load_reports(&job.meeting_id)?;
    println!(
        "\ncoverage {:.1}% of {} turns",
        100.0 * r.coverage.coverage,
        r.coverage.total_turns
    );
    for p in &r.answerability.fraction_ge {
        println!(
            "answerable at confidence >= {:.1}: {:.1}%",
            p.threshold,
            100.0 * p.fraction
        );
    }
    for m in &r.gold_match {
        let at = |t: f64| {
            m.covered_fraction_at
                .iter()
                .find(|p| (p.threshold - t).abs() < 1e-9)
                .map_or(0.0, |p| p.fraction)
        };
        println!(
            "gold covered by {:?}: {:.0}% at 0.5, {:.0}% at 0.3",
            m.metric,
            100.0 * at(0.5),
            100.0 * at(0.3)
        );
    }
    Ok(())
}
