//! Over-generation of candidate questions per segment.
//!
//! Each segment is tokenized and cut into prompt windows. Every window is
//! sent to the generation provider once per `(temperature, trial)` pair of
//! the sweep, the raw completions are parsed into questions, and the union
//! of all calls, deduplicated after casefolding, forms the segment's
//! question pool. Every pooled question keeps the list of calls that
//! produced it.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{debug, warn};

use crate::providers::{GenerationProvider, GenerationRequest, ProviderError, RetryPolicy};
use crate::segmentation::Segment;
use crate::transcript::{normalize_text, tokenize, Transcript};

#[derive(Debug, Error, PartialEq)]
pub enum GenerationError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("no questions survived parsing")]
    EmptyGeneration,
    #[error("segment {0} has no text")]
    EmptySegment(String),
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
}

pub const DEFAULT_PROMPT_TEMPLATE: &str =
    "Generate questions about the following meeting excerpt:\n{window}\nQuestions:";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub temperatures: Vec<f64>,
    pub trials_per_temperature: usize,
    pub max_output_tokens: usize,
    pub context_window_tokens: usize,
    pub stride_tokens: usize,
    pub prompt_template: String,
    /// Inclusive token-count bounds a question must meet to enter the pool.
    pub min_question_tokens: usize,
    pub max_question_tokens: usize,
    /// Concurrent provider calls per segment.
    pub parallelism: usize,
    pub retry: RetryPolicy,
}

/// `0.00, 0.05, …, 1.00`.
pub fn temperature_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            temperatures: temperature_grid(),
            trials_per_temperature: 10,
            max_output_tokens: 128,
            context_window_tokens: 2048,
            stride_tokens: 1024,
            prompt_template: DEFAULT_PROMPT_TEMPLATE.to_string(),
            min_question_tokens: 4,
            max_question_tokens: 60,
            parallelism: 8,
            retry: RetryPolicy::default(),
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), GenerationError> {
        let bad = |m: String| Err(GenerationError::InvalidConfig(m));
        if self.temperatures.is_empty() {
            return bad("temperature list is empty".into());
        }
        if let Some(t) = self.temperatures.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return bad(format!("temperature {t} outside [0, 1]"));
        }
        if self.trials_per_temperature == 0
            || self.max_output_tokens == 0
            || self.context_window_tokens == 0
            || self.stride_tokens == 0
            || self.parallelism == 0
        {
            return bad("counts must be ≥ 1".into());
        }
        if self.stride_tokens > self.context_window_tokens {
            return bad("stride_tokens exceeds context_window_tokens".into());
        }
        if !self.prompt_template.contains("{window}") {
            return bad("prompt template lacks a {window} placeholder".into());
        }
        Ok(())
    }
}

/// Slice of a segment's token sequence sent in one prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptWindow {
    pub segment_id: String,
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// Token ranges of the prompt windows over `num_tokens` tokens. One window
/// when everything fits; otherwise windows start every `stride` tokens and
/// the last one is clipped to end at `num_tokens`.
pub fn window_ranges(num_tokens: usize, window: usize, stride: usize) -> Vec<(usize, usize)> {
    assert!(window >= 1 && stride >= 1 && stride <= window);
    if num_tokens <= window {
        return vec![(0, num_tokens)];
    }
    let mut ranges = Vec::new();
    let mut start = 0;
    loop {
        let end = (start + window).min(num_tokens);
        ranges.push((start, end));
        if end == num_tokens {
            return ranges;
        }
        start += stride;
    }
}

pub fn window_segment(segment_id: &str, tokens: &[String], config: &GenerationConfig) -> Vec<PromptWindow> {
    window_ranges(tokens.len(), config.context_window_tokens, config.stride_tokens)
        .into_iter()
        .enumerate()
        .map(|(index, (start, end))| PromptWindow {
            segment_id: segment_id.to_string(),
            index,
            start,
            end,
            text: tokens[start..end].join(" "),
        })
        .collect()
}

fn strip_enumeration(line: &str) -> &str {
    let line = line.trim();
    for bullet in ["- ", "* ", "• ", "– "] {
        if let Some(rest) = line.strip_prefix(bullet) {
            return rest.trim_start();
        }
    }
    // "1." "1)" "Q1:" "Q1." style prefixes
    let body = line.strip_prefix('Q').unwrap_or(line);
    let digits = body.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &body[digits..];
        for sep in ['.', ')', ':'] {
            if let Some(rest) = rest.strip_prefix(sep) {
                return rest.trim_start();
            }
        }
    }
    line
}

/// Questions in a raw completion: one candidate per line, enumeration
/// prefixes removed, lines not ending in `?` dropped.
pub fn parse_questions(raw: &str) -> Vec<String> {
    raw.lines()
        .map(strip_enumeration)
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|l| l.ends_with('?') && l.len() > 1)
        .collect()
}

pub fn render_prompt(template: &str, window: &PromptWindow) -> String {
    template.replace("{window}", &window.text)
}

/// One provider call for one window at one temperature.
pub fn generate_for_window(
    provider: &dyn GenerationProvider,
    window: &PromptWindow,
    temperature: f64,
    trial: usize,
    config: &GenerationConfig,
) -> Result<Vec<String>, GenerationError> {
    let request = GenerationRequest {
        prompt: render_prompt(&config.prompt_template, window),
        temperature,
        max_tokens: config.max_output_tokens,
        segment_id: window.segment_id.clone(),
        window: window.index,
        trial,
        excerpt: window.text.clone(),
    };
    let raw = config.retry.run(|| provider.generate(&request))?;
    let questions = parse_questions(&raw);
    if questions.is_empty() {
        return Err(GenerationError::EmptyGeneration);
    }
    Ok(questions)
}

/// Identifies one provider call of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub window: usize,
    pub temperature: f64,
    pub trial: usize,
}

impl CallRecord {
    fn key(&self) -> (usize, u64, usize) {
        (self.window, self.temperature.to_bits(), self.trial)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledQuestion {
    pub text: String,
    pub provenance: Vec<CallRecord>,
}

/// Deduplicated union of all generated questions for one segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionPool {
    pub segment_id: String,
    pub questions: Vec<PooledQuestion>,
    #[serde(default)]
    pub failed_calls: usize,
    #[serde(default)]
    pub total_calls: usize,
}

impl QuestionPool {
    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn texts(&self) -> Vec<String> {
        self.questions.iter().map(|q| q.text.clone()).collect()
    }
}

/// All calls of the sweep in canonical order: window, then temperature,
/// then trial.
pub fn call_grid(num_windows: usize, config: &GenerationConfig) -> Vec<CallRecord> {
    let mut calls = Vec::new();
    for window in 0..num_windows {
        for &temperature in &config.temperatures {
            for trial in 0..config.trials_per_temperature {
                calls.push(CallRecord {
                    window,
                    temperature,
                    trial,
                });
            }
        }
    }
    calls
}

fn admissible(text: &str, config: &GenerationConfig) -> bool {
    let n = tokenize(text).len();
    (config.min_question_tokens..=config.max_question_tokens).contains(&n)
}

/// Runs the calls in `order` and reduces them into a pool. The result does
/// not depend on the order: questions are listed by their earliest call in
/// canonical order, and provenance lists are sorted the same way.
pub fn build_pool_with_order(
    segment_id: &str,
    segment_text: &str,
    provider: &dyn GenerationProvider,
    config: &GenerationConfig,
    order: &[CallRecord],
) -> Result<QuestionPool, GenerationError> {
    config.validate()?;
    let tokens = tokenize(segment_text);
    if tokens.is_empty() {
        return Err(GenerationError::EmptySegment(segment_id.to_string()));
    }
    let windows = window_segment(segment_id, &tokens, config);

    let run = || -> Vec<Result<Vec<String>, GenerationError>> {
        order
            .par_iter()
            .map(|call| {
                let window = windows
                    .get(call.window)
                    .ok_or_else(|| GenerationError::InvalidConfig(format!("no window {}", call.window)))?;
                generate_for_window(provider, window, call.temperature, call.trial, config)
            })
            .collect()
    };
    let results = match rayon::ThreadPoolBuilder::new().num_threads(config.parallelism).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    };

    let canonical: HashMap<(usize, u64, usize), usize> = call_grid(windows.len(), config)
        .iter()
        .enumerate()
        .map(|(i, c)| (c.key(), i))
        .collect();
    let rank = |c: &CallRecord| canonical.get(&c.key()).copied().unwrap_or(usize::MAX);

    let mut index: HashMap<String, usize> = HashMap::new();
    let mut questions: Vec<PooledQuestion> = Vec::new();
    let mut failed = 0;
    let mut last_error = None;
    for (call, result) in order.iter().zip(results) {
        match result {
            Ok(qs) => {
                for q in qs.into_iter().filter(|q| admissible(q, config)) {
                    let key = normalize_text(&q);
                    match index.get(&key) {
                        Some(&i) => {
                            let entry = &mut questions[i];
                            if !entry.provenance.iter().any(|c| c.key() == call.key()) {
                                entry.provenance.push(*call);
                            }
                            // keep the surface form from the earliest call
                            if rank(call) < rank(&entry.provenance[0]) {
                                entry.text = q;
                            }
                            entry.provenance.sort_by_key(|c| rank(c));
                        }
                        None => {
                            index.insert(key, questions.len());
                            questions.push(PooledQuestion {
                                text: q,
                                provenance: vec![*call],
                            });
                        }
                    }
                }
            }
            Err(GenerationError::EmptyGeneration) => {
                debug!(segment_id, ?call, "call produced no questions");
            }
            Err(e) => {
                warn!(segment_id, ?call, error = %e, "generation call failed, skipping");
                failed += 1;
                last_error = Some(e);
            }
        }
    }
    if failed == order.len() && !order.is_empty() {
        return Err(last_error.expect("at least one failure recorded"));
    }
    if failed > 0 {
        warn!(segment_id, failed, total = order.len(), "partial generation failure");
    }
    questions.sort_by(|a, b| {
        rank(&a.provenance[0])
            .cmp(&rank(&b.provenance[0]))
            .then_with(|| a.text.cmp(&b.text))
    });
    Ok(QuestionPool {
        segment_id: segment_id.to_string(),
        questions,
        failed_calls: failed,
        total_calls: order.len(),
    })
}

/// Sweeps every `(window, temperature, trial)` call for one segment.
pub fn build_pool(
    segment: &Segment,
    transcript: &Transcript,
    provider: &dyn GenerationProvider,
    config: &GenerationConfig,
) -> Result<QuestionPool, GenerationError> {
    let text = transcript.range_text(segment.start, segment.end);
    let tokens = tokenize(&text);
    let windows = window_ranges(tokens.len().max(1), config.context_window_tokens, config.stride_tokens);
    let order = call_grid(windows.len(), config);
    build_pool_with_order(&segment.segment_id, &text, provider, config, &order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::FnGenerator;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn quick_config() -> GenerationConfig {
        GenerationConfig {
            retry: RetryPolicy::none(),
            min_question_tokens: 1,
            ..GenerationConfig::default()
        }
    }

    #[test]
    fn window_examples() {
        assert_eq!(window_ranges(1500, 2048, 1024), [(0, 1500)]);
        assert_eq!(window_ranges(3000, 2048, 1024), [(0, 2048), (1024, 3000)]);
        assert_eq!(window_ranges(2048, 2048, 1024), [(0, 2048)]);
    }

    #[test]
    fn grid_has_21_temperatures() {
        let grid = temperature_grid();
        assert_eq!(grid.len(), 21);
        assert_eq!(grid[0], 0.0);
        assert_eq!(grid[20], 1.0);
        for pair in grid.windows(2) {
            assert!((pair[1] - pair[0] - 0.05).abs() < 1e-12);
        }
    }

    #[test]
    fn parse_rules() {
        assert_eq!(
            parse_questions("1. What is the budget?\n2. Who attended?"),
            ["What is the budget?", "Who attended?"]
        );
        assert!(parse_questions("The meeting was long.").is_empty());
        assert_eq!(
            parse_questions("Here you go:\n- Why  now?\n* How much?\nQ3: When?\n4) Where?\n?"),
            ["Why now?", "How much?", "When?", "Where?"]
        );
    }

    #[test]
    fn empty_generation_is_reported() {
        let provider = FnGenerator(|_: &GenerationRequest| Ok("The meeting was long.".to_string()));
        let window = PromptWindow {
            segment_id: "s".into(),
            index: 0,
            start: 0,
            end: 1,
            text: "x".into(),
        };
        assert_eq!(
            generate_for_window(&provider, &window, 0.5, 0, &quick_config()),
            Err(GenerationError::EmptyGeneration)
        );
    }

    #[test]
    fn prompt_contains_window() {
        let provider = FnGenerator(|r: &GenerationRequest| {
            assert!(r
                .prompt
                .starts_with("Generate questions about the following meeting excerpt:\n"));
            assert!(r.prompt.contains("budget talk"));
            assert!(r.prompt.ends_with("\nQuestions:"));
            assert_eq!(r.max_tokens, 128);
            Ok("Q?".to_string())
        });
        let window = PromptWindow {
            segment_id: "s".into(),
            index: 0,
            start: 0,
            end: 2,
            text: "budget talk".into(),
        };
        generate_for_window(&provider, &window, 0.0, 0, &quick_config()).unwrap();
    }

    #[test]
    fn same_questions_every_call_dedup_with_full_provenance() {
        let provider = FnGenerator(|_: &GenerationRequest| {
            Ok("1. What is the budget?\n2. Who leads the design?\n3. When is the deadline?".to_string())
        });
        let cfg = quick_config();
        let pool = build_pool_with_order("s", "some words here", &provider, &cfg, &call_grid(1, &cfg)).unwrap();
        assert_eq!(pool.len(), 3);
        for q in &pool.questions {
            assert_eq!(q.provenance.len(), 21 * 10);
        }
    }

    #[test]
    fn union_over_windows() {
        let provider = FnGenerator(|r: &GenerationRequest| {
            Ok(if r.window == 0 { "A one?\nB two?" } else { "C three?" }.to_string())
        });
        let cfg = GenerationConfig {
            context_window_tokens: 4,
            stride_tokens: 2,
            temperatures: vec![0.0, 0.5],
            trials_per_temperature: 2,
            ..quick_config()
        };
        // 6 tokens → windows [0,4) and [2,6)
        let pool = build_pool_with_order("s", "a b c d e f", &provider, &cfg, &call_grid(2, &cfg)).unwrap();
        assert_eq!(pool.texts(), ["A one?", "B two?", "C three?"]);
        assert_eq!(pool.total_calls, 8);
    }

    #[test]
    fn casefold_duplicates_merge() {
        let provider =
            FnGenerator(
                |r: &GenerationRequest| Ok(if r.trial == 0 { "What is X?" } else { "what  is x?" }.to_string()),
            );
        let cfg = GenerationConfig {
            temperatures: vec![0.2],
            trials_per_temperature: 2,
            ..quick_config()
        };
        let pool = build_pool_with_order("s", "x", &provider, &cfg, &call_grid(1, &cfg)).unwrap();
        assert_eq!(pool.texts(), ["What is X?"]);
        assert_eq!(pool.questions[0].provenance.len(), 2);
    }

    #[test]
    fn length_filter_applies_at_pool_admission() {
        let provider = FnGenerator(|_: &GenerationRequest| Ok("Who attended?\nWhat is the budget?".into()));
        let cfg = GenerationConfig {
            temperatures: vec![0.0],
            trials_per_temperature: 1,
            min_question_tokens: 4,
            ..quick_config()
        };
        let pool = build_pool_with_order("s", "x", &provider, &cfg, &call_grid(1, &cfg)).unwrap();
        assert_eq!(pool.texts(), ["What is the budget?"]);
    }

    #[test]
    fn partial_failure_tolerated_total_failure_propagates() {
        let calls = AtomicUsize::new(0);
        let flaky = FnGenerator(|r: &GenerationRequest| {
            calls.fetch_add(1, Ordering::SeqCst);
            if r.trial.is_multiple_of(2) {
                Err(ProviderError::unavailable("down"))
            } else {
                Ok("Is it up?".into())
            }
        });
        let cfg = GenerationConfig {
            temperatures: vec![0.1],
            trials_per_temperature: 4,
            retry: RetryPolicy {
                max_retries: 2,
                initial_backoff: std::time::Duration::ZERO,
            },
            ..quick_config()
        };
        let pool = build_pool_with_order("s", "x", &flaky, &cfg, &call_grid(1, &cfg)).unwrap();
        assert_eq!(pool.failed_calls, 2);
        assert_eq!(pool.len(), 1);
        // 2 succeeding calls + 2 failing calls × 3 attempts each
        assert_eq!(calls.load(Ordering::SeqCst), 2 + 2 * 3);

        let down = FnGenerator(|_: &GenerationRequest| Err(ProviderError::unavailable("down")));
        let err = build_pool_with_order("s", "x", &down, &cfg, &call_grid(1, &cfg)).unwrap_err();
        assert!(matches!(
            err,
            GenerationError::Provider(ProviderError::Unavailable { attempts: 3, .. })
        ));
    }

    #[test]
    fn empty_segment_rejected() {
        let provider = FnGenerator(|_: &GenerationRequest| Ok("Q?".into()));
        let cfg = quick_config();
        assert!(matches!(
            build_pool_with_order("s", "   ", &provider, &cfg, &call_grid(1, &cfg)),
            Err(GenerationError::EmptySegment(_))
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = GenerationConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.temperatures.push(1.2);
        assert!(cfg.validate().is_err());
        let cfg = GenerationConfig {
            stride_tokens: 4096,
            ..GenerationConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
