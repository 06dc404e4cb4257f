//! Unsupervised topic segmentation over utterance embeddings.
//!
//! Utterances are embedded, grouped into fixed-size blocks, and each block is
//! max-pooled coordinatewise. A topic boundary is placed between two adjacent
//! blocks whose cosine similarity falls below a threshold. Segments shorter
//! than `min_segment_turns` are folded into their predecessor.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::providers::{EmbeddingProvider, ProviderError};
use crate::transcript::Transcript;

#[derive(Debug, Error, PartialEq)]
pub enum SegmentationError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("embedding dimension mismatch: expected {expected}, got {found} (item {index})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        index: usize,
    },
    #[error("provider returned {found} vectors for {expected} utterances")]
    CountMismatch { expected: usize, found: usize },
    #[error("embedding {index} has a non-finite entry")]
    NonFinite { index: usize },
    #[error("invalid segmentation config: {0}")]
    InvalidConfig(String),
}

/// Dense embedding of one utterance, block, or subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(pub Vec<f64>);

impl Embedding {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| *x == 0.0)
    }

    /// Cosine similarity; 0 when either vector is zero.
    pub fn cosine(&self, other: &Embedding) -> f64 {
        cosine(&self.0, &other.0)
    }
}

impl From<Vec<f64>> for Embedding {
    fn from(v: Vec<f64>) -> Self {
        Embedding(v)
    }
}

/// Cosine similarity of two equal-length slices; 0 when either is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    pub block_size: usize,
    pub threshold: f64,
    pub min_segment_turns: usize,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            block_size: 3,
            threshold: 0.55,
            min_segment_turns: 5,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<(), SegmentationError> {
        if self.block_size == 0 {
            return Err(SegmentationError::InvalidConfig("block_size must be ≥ 1".into()));
        }
        if self.min_segment_turns == 0 {
            return Err(SegmentationError::InvalidConfig("min_segment_turns must be ≥ 1".into()));
        }
        if !(-1.0..=1.0).contains(&self.threshold) {
            return Err(SegmentationError::InvalidConfig(format!(
                "threshold {} outside [-1, 1]",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Contiguous turn range `[start, end)` of one meeting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub segment_id: String,
    pub meeting_id: String,
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn ordinal(&self) -> usize {
        self.segment_id
            .rsplit_once('-')
            .and_then(|(_, n)| n.parse().ok())
            .unwrap_or(0)
    }
}

/// Segment ids count from 1 in turn order: `{meeting}#seg-1`, …
pub fn segment_id(meeting_id: &str, ordinal: usize) -> String {
    format!("{meeting_id}#seg-{ordinal}")
}

/// Embeds texts and checks count, dimension, and finiteness.
pub fn embed_texts(texts: &[String], provider: &dyn EmbeddingProvider) -> Result<Vec<Embedding>, SegmentationError> {
    let vectors = provider.embed(texts)?;
    if vectors.len() != texts.len() {
        return Err(SegmentationError::CountMismatch {
            expected: texts.len(),
            found: vectors.len(),
        });
    }
    let dim = vectors.first().map_or(0, Vec::len);
    for (index, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(SegmentationError::DimensionMismatch {
                expected: dim,
                found: v.len(),
                index,
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(SegmentationError::NonFinite { index });
        }
    }
    Ok(vectors.into_iter().map(Embedding).collect())
}

/// One embedding per turn, in turn order.
pub fn embed_utterances(
    transcript: &Transcript,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<Embedding>, SegmentationError> {
    embed_texts(&transcript.turn_texts(), provider)
}

/// Coordinatewise max over consecutive blocks of `block_size` vectors. The
/// final block may be partial.
pub fn block_pool(embeddings: &[Embedding], block_size: usize) -> Vec<Embedding> {
    assert!(block_size >= 1, "block_size must be ≥ 1");
    embeddings
        .chunks(block_size)
        .map(|block| {
            let mut pooled = block[0].0.clone();
            for v in &block[1..] {
                for (p, x) in pooled.iter_mut().zip(&v.0) {
                    *p = p.max(*x);
                }
            }
            Embedding(pooled)
        })
        .collect()
}

/// Indices `i` such that a boundary falls between block `i` and `i + 1`.
pub fn detect_boundaries(blocks: &[Embedding], threshold: f64) -> Vec<usize> {
    blocks
        .windows(2)
        .enumerate()
        .filter(|(_, pair)| pair[0].cosine(&pair[1]) < threshold)
        .map(|(i, _)| i)
        .collect()
}

/// Turn ranges from block boundaries, with short segments merged into the
/// previous one. A short leading segment merges forward instead.
pub fn segment_ranges(
    num_turns: usize,
    block_boundaries: &[usize],
    config: &SegmentationConfig,
) -> Vec<(usize, usize)> {
    let mut cuts: Vec<usize> = block_boundaries
        .iter()
        .map(|b| (b + 1) * config.block_size)
        .filter(|&t| t > 0 && t < num_turns)
        .collect();
    cuts.dedup();

    let mut ranges: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for cut in cuts.into_iter().chain(std::iter::once(num_turns)) {
        let range = (start, cut);
        start = cut;
        match ranges.last_mut() {
            Some(prev) if range.1 - range.0 < config.min_segment_turns => prev.1 = range.1,
            _ => ranges.push(range),
        }
    }
    if ranges.len() > 1 && ranges[0].1 - ranges[0].0 < config.min_segment_turns {
        let first = ranges.remove(0);
        ranges[0].0 = first.0;
    }
    ranges
}

/// Segments from precomputed utterance embeddings.
pub fn segment_embeddings(
    meeting_id: &str,
    embeddings: &[Embedding],
    config: &SegmentationConfig,
) -> Result<Vec<Segment>, SegmentationError> {
    config.validate()?;
    if embeddings.is_empty() {
        return Ok(Vec::new());
    }
    let blocks = block_pool(embeddings, config.block_size);
    let boundaries = detect_boundaries(&blocks, config.threshold);
    Ok(segment_ranges(embeddings.len(), &boundaries, config)
        .into_iter()
        .enumerate()
        .map(|(ordinal, (start, end))| Segment {
            segment_id: segment_id(meeting_id, ordinal + 1),
            meeting_id: meeting_id.to_string(),
            start,
            end,
        })
        .collect())
}

pub fn segment(
    transcript: &Transcript,
    config: &SegmentationConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<Segment>, SegmentationError> {
    config.validate()?;
    let embeddings = embed_utterances(transcript, provider)?;
    segment_embeddings(&transcript.meeting_id, &embeddings, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::StaticEmbedder;
    use crate::transcript::Category;
    use proptest::prelude::*;

    fn e(v: &[f64]) -> Embedding {
        Embedding(v.to_vec())
    }

    struct Fixed(Vec<Vec<f64>>);
    impl EmbeddingProvider for Fixed {
        fn embed(&self, _: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
            Ok(self.0.clone())
        }
    }

    struct Down;
    impl EmbeddingProvider for Down {
        fn embed(&self, _: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
            crate::providers::RetryPolicy {
                max_retries: 2,
                initial_backoff: std::time::Duration::ZERO,
            }
            .run(|| Err(ProviderError::unavailable("timed out")))
        }
    }

    fn transcript(n: usize) -> Transcript {
        Transcript::new("m", Category::Other, (0..n).map(|i| ("S", format!("t{i}")))).unwrap()
    }

    #[test]
    fn embed_preserves_order_and_dim() {
        let t = transcript(3);
        let basis = StaticEmbedder::new([
            ("t0", vec![1.0, 0.0, 0.0]),
            ("t1", vec![0.0, 1.0, 0.0]),
            ("t2", vec![0.0, 0.0, 1.0]),
        ]);
        let v = embed_utterances(&t, &basis).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v[1], e(&[0.0, 1.0, 0.0]));
    }

    #[test]
    fn embed_errors() {
        let t = transcript(2);
        let err = embed_utterances(&t, &Down).unwrap_err();
        assert!(matches!(
            err,
            SegmentationError::Provider(ProviderError::Unavailable { attempts: 3, .. })
        ));
        assert!(err.to_string().contains("3 attempt"));
        let err = embed_utterances(&t, &Fixed(vec![vec![0.0; 4], vec![0.0; 5]])).unwrap_err();
        assert_eq!(
            err,
            SegmentationError::DimensionMismatch {
                expected: 4,
                found: 5,
                index: 1
            }
        );
        let err = embed_utterances(&t, &Fixed(vec![vec![0.0; 4]])).unwrap_err();
        assert!(matches!(err, SegmentationError::CountMismatch { .. }));
        let err = embed_utterances(&t, &Fixed(vec![vec![0.0], vec![f64::NAN]])).unwrap_err();
        assert_eq!(err, SegmentationError::NonFinite { index: 1 });
    }

    #[test]
    fn block_pool_examples() {
        assert_eq!(block_pool(&[e(&[1.0, 0.0]), e(&[0.0, 1.0])], 2), [e(&[1.0, 1.0])]);
        let v: Vec<Embedding> = (0..5).map(|i| e(&[i as f64, -(i as f64)])).collect();
        assert_eq!(block_pool(&v, 1), v);
        let pooled = block_pool(&v, 2);
        assert_eq!(pooled.len(), 3);
        assert_eq!(pooled[2], v[4]);
        assert_eq!(pooled[0], e(&[1.0, 0.0]));
    }

    #[test]
    fn boundary_examples() {
        let same = vec![e(&[0.3, 0.4]); 4];
        assert!(detect_boundaries(&same, 0.5).is_empty());
        assert_eq!(detect_boundaries(&[e(&[1.0, 0.0]), e(&[0.0, 1.0])], 0.5), [0]);
        // zero vectors have cosine 0 with everything
        let z = [e(&[0.0, 0.0]), e(&[0.0, 0.0])];
        assert_eq!(detect_boundaries(&z, 0.1), [0]);
        assert!(detect_boundaries(&z, 0.0).is_empty());
    }

    #[test]
    fn constant_embeddings_give_one_segment() {
        let t = transcript(17);
        let segs = segment(&t, &SegmentationConfig::default(), &Fixed(vec![vec![1.0, 2.0]; 17])).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!((segs[0].start, segs[0].end), (0, 17));
        assert_eq!(segs[0].segment_id, "m#seg-1");
        assert_eq!(segs[0].ordinal(), 1);
    }

    #[test]
    fn boundary_index_arithmetic() {
        let cfg = SegmentationConfig {
            block_size: 2,
            threshold: 0.5,
            min_segment_turns: 1,
        };
        assert_eq!(segment_ranges(10, &[2], &cfg), [(0, 6), (6, 10)]);
    }

    #[test]
    fn short_segments_merge_backwards() {
        let cfg = SegmentationConfig {
            block_size: 3,
            threshold: 0.5,
            min_segment_turns: 5,
        };
        // cuts at 9, 12, 21 → [0,9) [9,12) [12,21) [21,24): the 3-turn pieces fold back
        assert_eq!(segment_ranges(24, &[2, 3, 6], &cfg), [(0, 12), (12, 24)]);
        // short leading segment folds forward
        assert_eq!(segment_ranges(20, &[0], &cfg), [(0, 20)]);
    }

    #[test]
    fn invalid_config_rejected() {
        let t = transcript(3);
        let bad = SegmentationConfig {
            block_size: 0,
            ..Default::default()
        };
        assert!(matches!(
            segment(&t, &bad, &Fixed(vec![vec![1.0]; 3])),
            Err(SegmentationError::InvalidConfig(_))
        ));
    }

    fn embeddings_strategy() -> impl Strategy<Value = Vec<Embedding>> {
        (1usize..5)
            .prop_flat_map(|d| prop::collection::vec(prop::collection::vec(-1.0f64..1.0, d).prop_map(Embedding), 1..40))
    }

    proptest! {
        #[test]
        fn segments_partition_turns(
            emb in embeddings_strategy(),
            block_size in 1usize..6,
            threshold in -1.0f64..1.0,
            min_turns in 1usize..8,
        ) {
            let cfg = SegmentationConfig { block_size, threshold, min_segment_turns: min_turns };
            let segs = segment_embeddings("m", &emb, &cfg).unwrap();
            prop_assert_eq!(segs[0].start, 0);
            prop_assert_eq!(segs.last().unwrap().end, emb.len());
            for pair in segs.windows(2) {
                prop_assert_eq!(pair[0].end, pair[1].start);
            }
            prop_assert!(segs.iter().all(|s| s.start < s.end));
        }

        #[test]
        fn boundaries_monotone_in_threshold(
            emb in embeddings_strategy(),
            block_size in 1usize..4,
            t1 in -1.0f64..1.0,
            t2 in -1.0f64..1.0,
        ) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let blocks = block_pool(&emb, block_size);
            let low = detect_boundaries(&blocks, lo);
            let high = detect_boundaries(&blocks, hi);
            prop_assert!(low.iter().all(|b| high.contains(b)));
        }

        #[test]
        fn oversized_block_is_global_max(emb in embeddings_strategy(), extra in 0usize..5) {
            let pooled = block_pool(&emb, emb.len() + extra);
            prop_assert_eq!(pooled.len(), 1);
            for j in 0..emb[0].dim() {
                let m = emb.iter().map(|v| v.0[j]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert_eq!(pooled[0].0[j], m);
            }
        }

        #[test]
        fn scale_invariant(emb in embeddings_strategy(), k in -6i32..6, threshold in -1.0f64..1.0) {
            let cfg = SegmentationConfig { block_size: 2, threshold, min_segment_turns: 2 };
            let scale = 2f64.powi(k);
            let scaled: Vec<Embedding> =
                emb.iter().map(|v| Embedding(v.0.iter().map(|x| x * scale).collect())).collect();
            prop_assert_eq!(
                segment_embeddings("m", &emb, &cfg).unwrap(),
                segment_embeddings("m", &scaled, &cfg).unwrap()
            );
        }
    }
}
