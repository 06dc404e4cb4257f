//! Topic segmentation of the demo meeting.
//!
//! Embeds every turn, max-pools blocks of turns, and cuts wherever two
//! neighbouring blocks fall below the similarity threshold. The example
//! prints the block similarities and then sweeps the threshold to show how
//! the cut count responds.
//!
//! ```text
//! cargo run -p preme-core --example segment_transcript
//! ```

use preme_core::pipeline::{demo_transcript, MOCK_SEGMENTATION_THRESHOLD};
use preme_core::providers::HashEmbedder;
use preme_core::segmentation::{block_pool, embed_utterances, segment_embeddings, SegmentationConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let transcript = demo_transcript();
    let embeddings = embed_utterances(&transcript, &HashEmbedder::default())?;
    let config = SegmentationConfig {
        threshold: MOCK_SEGMENTATION_THRESHOLD,
        ..SegmentationConfig::default()
    };

    let blocks = block_pool(&embeddings, config.block_size);
    println!(
        "{} turns, {} blocks of {}",
        transcript.len(),
        blocks.len(),
        config.block_size
    );
    for (i, pair) in blocks.windows(2).enumerate() {
        let sim = pair[0].cosine(&pair[1]);
        let turn = (i + 1) * config.block_size;
        let mark = if sim < config.threshold { "  <- boundary" } else { "" };
        println!("  before turn {turn:>2}: {sim:.3}{mark}");
    }

    println!();
    for seg in segment_embeddings(&transcript.meeting_id, &embeddings, &config)? {
        let first = &transcript.turns[seg.start].text;
        println!(
            "{}  turns {:>2}..{:<2}  \"{}...\"",
            seg.segment_id,
            seg.start,
            seg.end,
            &first[..first.len().min(50)]
        );
    }

    // raising the threshold can only add cuts; merging short pieces may
    // still hide some of them
    println!("\nthreshold  segments");
    for threshold in [0.1, 0.2, 0.3, 0.4, 0.5, 0.55] {
        let cfg = SegmentationConfig { threshold, ..config };
        let n = segment_embeddings(&transcript.meeting_id, &embeddings, &cfg)?.len();
        println!("  {threshold:<8} {n}");
    }
    Ok(())
}
