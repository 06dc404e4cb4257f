//! Training the subject/aspect CRF tagger.
//!
//! Trains on the bundled annotated questions, reports 10-fold
//! cross-validated precision, recall and F1 per span class, then tags a few
//! unseen questions.
//!
//! ```text
//! cargo run --release -p preme-core --example train_tagger [ANNOTATIONS.conll]
//! ```

use preme_core::pipeline::demo_annotations;
use preme_core::providers::RuleTagger;
use preme_core::tagger::cv::cross_validate;
use preme_core::tagger::train::{train, TrainConfig};
use preme_core::tagger::Tagger;
use preme_core::transcript::{detokenize, parse_annotations};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let questions = match std::env::args().nth(1) {
        Some(path) => parse_annotations(&std::fs::read(path)?)?.questions,
        None => demo_annotations(),
    };
    let config = TrainConfig::default();

    let (model, report) = train(&questions, &config)?;
    println!(
        "{} questions, {} features: loss {:.2} -> {:.2} after {} iterations ({:?})",
        questions.len(),
        model.num_features(),
        report.loss_history[0],
        report.final_loss(),
        report.iterations,
        report.stop_reason
    );

    let cv = cross_validate(&questions, 10, &config, 0)?;
    println!("\n10-fold cross-validation (token level)");
    println!("  class         precision  recall  f1");
    for (class, s) in &cv.mean {
        println!(
            "  {:<13} {:>9.3}  {:>6.3}  {:.3}",
            format!("{class:?}"),
            s.precision,
            s.recall,
            s.f1
        );
    }

    let tagger = Tagger::new(model)?;
    println!();
    for q in [
        "What is the battery life of the new prototype?",
        "Why did the committee reject the housing plan?",
        "How will the slogan be incorporated into the advertising poster?",
    ] {
        let (tokens, tags) = tagger.tag_text(q, &RuleTagger)?;
        let spans = |s: &[preme_core::tagger::bio::Span]| -> Vec<String> {
            s.iter().map(|s| detokenize(&tokens[s.start..s.end])).collect()
        };
        println!(
            "{q}\n  subjects {:?}  aspects {:?}",
            spans(&tags.subject_spans),
            spans(&tags.aspect_spans)
        );
    }
    Ok(())
}
