//! Question generation protocol: windows, temperature sweep, pooling.
//!
//! Each segment is cut into overlapping token windows. Every window is sent
//! to the generator once per (temperature, trial) pair and the answers are
//! pooled with case-insensitive deduplication. The offline mock generator
//! stands in for a hosted language model here.
//!
//! ```text
//! cargo run --release -p preme-core --example generate_questions
//! ```

use preme_core::pipeline::{demo_transcript, MOCK_SEGMENTATION_THRESHOLD};
use preme_core::providers::{HashEmbedder, MockGenerator};
use preme_core::question_gen::{
    build_pool, build_pool_with_order, call_grid, temperature_grid, window_ranges, GenerationConfig,
};
use preme_core::segmentation::{segment, SegmentationConfig};
use preme_core::transcript::tokenize;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = temperature_grid();
    println!(
        "{} temperatures: {:?} ... {:?}",
        grid.len(),
        &grid[..3],
        &grid[grid.len() - 2..]
    );
    println!("\nwindows of 2048 tokens, stride 1024:");
    for n in [1, 1024, 2048, 2049, 3000, 5000] {
        println!("  {n:>4} tokens -> {:?}", window_ranges(n, 2048, 1024));
    }

    let transcript = demo_transcript();
    let seg_cfg = SegmentationConfig {
        threshold: MOCK_SEGMENTATION_THRESHOLD,
        ..SegmentationConfig::default()
    };
    let segments = segment(&transcript, &seg_cfg, &HashEmbedder::default())?;
    let config = GenerationConfig::default();
    let generator = MockGenerator::default();

    for seg in &segments {
        let pool = build_pool(seg, &transcript, &generator, &config)?;
        println!(
            "\n{} ({} tokens): {} calls, {} failed, {} distinct questions",
            seg.segment_id,
            tokenize(&transcript.range_text(seg.start, seg.end)).len(),
            pool.total_calls,
            pool.failed_calls,
            pool.len()
        );
        let mut by_support: Vec<_> = pool.questions.iter().collect();
        by_support.sort_by_key(|q| std::cmp::Reverse(q.provenance.len()));
        for q in by_support.iter().take(4) {
            println!("  {:>3} calls  {}", q.provenance.len(), q.text);
        }
    }

    // the pool does not depend on the order the calls run in
    let seg = &segments[0];
    let text = transcript.range_text(seg.start, seg.end);
    let mut order = call_grid(1, &config);
    let canonical = build_pool_with_order(&seg.segment_id, &text, &generator, &config, &order)?;
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(3));
    let shuffled = build_pool_with_order(&seg.segment_id, &text, &generator, &config, &order)?;
    println!("\nshuffled call order gives the same pool: {}", canonical == shuffled);
    Ok(())
}
