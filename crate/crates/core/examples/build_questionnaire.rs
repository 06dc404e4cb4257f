//! Building a questionnaire stage by stage, without the pipeline runner.
//!
//! Segments the demo meeting, generates and tags questions for each
//! segment, normalizes subjects, and assembles the subject, aspect and
//! question tree with an answer span per question. The result is printed as
//! the JSON the service and explorer read.
//!
//! ```text
//! cargo run --release -p preme-core --example build_questionnaire [--json]
//! ```

use preme_core::evaluation::LexicalLocator;
use preme_core::pipeline::{demo_annotations, demo_transcript, MOCK_SEGMENTATION_THRESHOLD};
use preme_core::providers::{HashEmbedder, MockGenerator, RuleTagger};
use preme_core::question_gen::{build_pool, GenerationConfig};
use preme_core::questionnaire::assemble;
use preme_core::segmentation::{segment, SegmentationConfig};
use preme_core::subject_network::{normalize_segment, NormalizationConfig};
use preme_core::tagger::train::{train, TrainConfig};
use preme_core::tagger::{tag_pool, Tagger};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let transcript = demo_transcript();
    let embedder = HashEmbedder::default();

    let seg_cfg = SegmentationConfig {
        threshold: MOCK_SEGMENTATION_THRESHOLD,
        ..SegmentationConfig::default()
    };
    let segments = segment(&transcript, &seg_cfg, &embedder)?;

    let (model, _) = train(&demo_annotations(), &TrainConfig::default())?;
    let tagger = Tagger::new(model)?;

    let mut tagged = Vec::new();
    let mut normalized = Vec::new();
    for seg in &segments {
        let pool = build_pool(
            seg,
            &transcript,
            &MockGenerator::default(),
            &GenerationConfig::default(),
        )?;
        let questions = tag_pool(&tagger, &pool, &RuleTagger)?;
        normalized.push(normalize_segment(
            &seg.segment_id,
            &questions,
            &embedder,
            &NormalizationConfig::default(),
        )?);
        tagged.push(questions);
    }

    let (questionnaire, warnings) = assemble(&transcript, &segments, &normalized, &tagged, &LexicalLocator::default())?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    if std::env::args().any(|a| a == "--json") {
        print!("{}", questionnaire.to_json());
        return Ok(());
    }
    for entry in &questionnaire.entries {
        println!("{}  ({})", entry.subject, entry.segment_id);
        for aspect in &entry.aspects {
            println!("  {}", aspect.aspect);
            for id in aspect.question_ids.iter().take(2) {
                let q = &questionnaire.questions[id];
                let span = q
                    .answer_span
                    .map_or("no answer span".to_string(), |(s, e)| format!("turns {s}..{e}"));
                println!("    {id:<5} {}  [{span}]", q.text);
            }
            if aspect.question_ids.len() > 2 {
                println!("    ... {} more", aspect.question_ids.len() - 2);
            }
        }
    }
    Ok(())
}
