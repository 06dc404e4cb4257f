//! Property tests for the invariants that cut across modules. Each oracle
//! here is written independently of the code it checks.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use preme_core::evaluation::{
    bleu4, coverage_from_spans, default_thresholds, fraction_ge, gold_match_from_max, krippendorff_alpha, rouge1_f1,
    MatchMetric,
};
use preme_core::providers::MockGenerator;
use preme_core::question_gen::{build_pool_with_order, call_grid, window_ranges, GenerationConfig};
use preme_core::questionnaire::{
    AspectEntry, Event, QuestionRecord, Questionnaire, Session, SessionState, SubjectEntry,
};
use preme_core::subject_network::{pagerank, PageRankConfig};
use preme_core::tagger::crf::{log_sum_exp, CrfModel, Sequence};
use proptest::prelude::*;
use proptest::sample::subsequence;

// ------------------------------------------------------------ PageRank

/// Symmetric non-negative matrices with a zero diagonal; some rows empty.
fn networks() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..12).prop_flat_map(|n| {
        prop::collection::vec(prop_oneof![1 => Just(0.0), 3 => 0.0f64..=1.0], n * n).prop_map(move |raw| {
            let mut w = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in (i + 1)..n {
                    w[i][j] = raw[i * n + j];
                    w[j][i] = raw[i * n + j];
                }
            }
            w
        })
    })
}

/// Dense Google-matrix iteration run far past convergence.
fn pagerank_oracle(w: &[Vec<f64>], d: f64) -> Vec<f64> {
    let n = w.len();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        let out: f64 = w[i].iter().sum();
        for j in 0..n {
            let walk = if out > 0.0 { w[i][j] / out } else { 1.0 / n as f64 };
            g[i][j] = (1.0 - d) / n as f64 + d * walk;
        }
    }
    let mut r = vec![1.0 / n as f64; n];
    for _ in 0..5000 {
        let next: Vec<f64> = (0..n).map(|j| (0..n).map(|i| r[i] * g[i][j]).sum()).collect();
        let change: f64 = next.iter().zip(&r).map(|(a, b)| (a - b).abs()).sum();
        r = next;
        if change < 1e-15 {
            break;
        }
    }
    r
}

fn argmax(v: &[f64]) -> usize {
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    v.iter().position(|&x| x == top).unwrap()
}

proptest! {
    #[test]
    fn pagerank_matches_dense_oracle(w in networks()) {
        let out = pagerank(&w, &PageRankConfig::default());
        prop_assert!(out.converged);
        let oracle = pagerank_oracle(&w, 0.85);
        for (a, b) in out.scores.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            prop_assert!(*a > 0.0);
        }
        prop_assert!((out.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pagerank_argmax_survives_uniform_scaling(w in networks(), c in 0.01f64..100.0) {
        let base = pagerank(&w, &PageRankConfig::default()).scores;
        let scaled: Vec<Vec<f64>> = w.iter().map(|r| r.iter().map(|x| x * c).collect()).collect();
        let other = pagerank(&scaled, &PageRankConfig::default()).scores;
        for (a, b) in base.iter().zip(&other) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let top = base.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let clear_winner = base.iter().filter(|&&s| top - s < 1e-9).count() == 1;
        if clear_winner {
            prop_assert_eq!(argmax(&base), argmax(&other));
        }
    }
}

// ------------------------------------------------------------- metrics

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop::sample::select(vec!["the", "cost", "remote", "design", "why", "is", "a", "button"]),
        0..12,
    )
    .prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn text_metrics_are_bounded(a in sentence(), b in sentence()) {
        for s in [rouge1_f1(&a, &b), bleu4(&a, &b)] {
            prop_assert!((0.0..=1.0).contains(&s), "{s}");
        }
        prop_assert!((rouge1_f1(&a, &b) - rouge1_f1(&b, &a)).abs() < 1e-12);
    }

    #[test]
    fn identical_texts_score_one(a in sentence()) {
        let n = a.split_whitespace().count();
        if n > 0 {
            prop_assert!((rouge1_f1(&a, &a) - 1.0).abs() < 1e-12);
        }
        if n >= 4 {
            prop_assert!((bleu4(&a, &a) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn curves_never_rise_with_threshold(values in prop::collection::vec(0.0f64..=1.0, 0..40)) {
        let curve = fraction_ge(&values, &default_thresholds());
        for pair in curve.windows(2) {
            // thresholds descend, so coverage can only grow
            prop_assert!(pair[0].threshold > pair[1].threshold);
            prop_assert!(pair[0].fraction <= pair[1].fraction);
        }
        let report = gold_match_from_max(MatchMetric::Rouge1F1, values.clone(), &default_thresholds());
        prop_assert_eq!(report.covered_fraction_at, curve);
    }

    #[test]
    fn alpha_is_one_under_agreement_and_order_free(
        items in prop::collection::vec((0u8..4, 2usize..4), 2..20),
        noise in prop::collection::vec(0u8..4, 60),
        rotate in 0usize..20,
    ) {
        let agreed: Vec<Vec<u8>> = items.iter().map(|&(v, k)| vec![v; k]).collect();
        let delta = |a: &u8, b: &u8| if a == b { 0.0 } else { 1.0 };
        prop_assert_eq!(krippendorff_alpha(&agreed, delta).unwrap(), 1.0);

        let mut noisy = agreed.clone();
        for (u, x) in noisy.iter_mut().zip(&noise) {
            u[0] = *x;
        }
        if let Ok(alpha) = krippendorff_alpha(&noisy, delta) {
            prop_assert!(alpha <= 1.0 + 1e-12);
            let mut rotated = noisy.clone();
            let k = rotate % rotated.len();
            rotated.rotate_left(k);
            let again = krippendorff_alpha(&rotated, delta).unwrap();
            prop_assert!((alpha - again).abs() < 1e-12 || (alpha.is_nan() && again.is_nan()));
        }
    }
}

// ------------------------------------------------------------ coverage

fn spans(total: usize) -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0..total + 3, 1usize..6).prop_map(|(s, len)| (s, s + len)), 0..4)
}

fn span_fixture() -> impl Strategy<Value = (usize, Vec<Vec<(usize, usize)>>)> {
    (1usize..40).prop_flat_map(|total| (Just(total), prop::collection::vec(spans(total), 0..10)))
}

fn as_map(per_question: &[Vec<(usize, usize)>]) -> IndexMap<String, Vec<(usize, usize)>> {
    per_question
        .iter()
        .enumerate()
        .map(|(i, s)| (format!("q{}", i + 1), s.clone()))
        .collect()
}

proptest! {
    #[test]
    fn coverage_is_union_fraction((total, per_question) in span_fixture()) {
        let mut covered = vec![false; total];
        for &(s, e) in per_question.iter().flatten() {
            for c in covered.iter_mut().take(e).skip(s) {
                *c = true;
            }
        }
        let expected = covered.iter().filter(|&&c| c).count() as f64 / total as f64;
        let report = coverage_from_spans("m", total, as_map(&per_question));
        prop_assert_eq!(report.coverage, expected);
    }

    #[test]
    fn coverage_grows_with_questions((total, per_question) in span_fixture(), extra in spans(40)) {
        let before = coverage_from_spans("m", total, as_map(&per_question));
        let mut more = per_question.clone();
        more.push(extra);
        let after = coverage_from_spans("m", total, as_map(&more));
        prop_assert!(after.coverage >= before.coverage);
        prop_assert!(before.covered_turns.is_subset(&after.covered_turns));
    }
}

// ---------------------------------------------------- question generation

proptest! {
    #[test]
    fn windows_tile_the_segment(n in 1usize..6000, window in 1usize..3000, stride_frac in 0.05f64..=1.0) {
        let stride = ((window as f64 * stride_frac) as usize).clamp(1, window);
        let ranges = window_ranges(n, window, stride);
        prop_assert_eq!(ranges[0].0, 0);
        prop_assert_eq!(ranges.last().unwrap().1, n);
        let expected = if n <= window { 1 } else { (n - window).div_ceil(stride) + 1 };
        prop_assert_eq!(ranges.len(), expected);
        for (i, &(s, e)) in ranges.iter().enumerate() {
            prop_assert!(s < e && e - s <= window);
            if n > window {
                prop_assert_eq!(s, i * stride);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pool_ignores_call_order(seed in any::<u64>(), words in prop::collection::vec("[a-z]{3,8}", 20..80)) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let config = GenerationConfig {
            temperatures: vec![0.0, 0.5, 1.0],
            trials_per_temperature: 3,
            context_window_tokens: 32,
            stride_tokens: 16,
            ..GenerationConfig::default()
        };
        let text = words.join(" ");
        let windows = window_ranges(words.len(), 32, 16).len();
        let canonical = call_grid(windows, &config);
        let mut shuffled = canonical.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let generator = MockGenerator::default();
        let a = build_pool_with_order("m#seg-1", &text, &generator, &config, &canonical);
        let b = build_pool_with_order("m#seg-1", &text, &generator, &config, &shuffled);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(a), Err(b)) => prop_assert!(false, "both failed: {a} {b}"),
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
    }
}

// ------------------------------------------------------------------ CRF

fn crf_case() -> impl Strategy<Value = (CrfModel, Sequence)> {
    (1usize..7, 1usize..6).prop_flat_map(|(labels, len)| {
        let features = 5;
        let params = labels * features + labels * labels;
        (
            prop::collection::vec(-3.0f64..3.0, params),
            prop::collection::vec(subsequence((0..features).collect::<Vec<_>>(), 0..=3), len),
        )
            .prop_map(move |(p, feats)| {
                let mut m = CrfModel::with_dimensions(labels, features, 0.0);
                m.set_params(&p);
                (m, Sequence::new(feats))
            })
    })
}

proptest! {
    #[test]
    fn crf_inference_is_consistent((m, seq) in crf_case()) {
        let fb = m.forward_backward(&seq).unwrap();
        let (path, best) = m.viterbi(&seq).unwrap();
        prop_assert!((m.score(&seq, &path).unwrap() - best).abs() < 1e-9);
        prop_assert!(best <= fb.log_partition + 1e-9);
        // the partition is at most |Y|^T times the best path
        let bound = best + seq.len() as f64 * (m.num_labels() as f64).ln();
        prop_assert!(fb.log_partition <= bound + 1e-9);
        for row in &fb.position {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let expected_pairs: f64 = fb.transitions.iter().sum();
        prop_assert!((expected_pairs - (seq.len() - 1) as f64).abs() < 1e-9);
        let first = log_sum_exp(fb.position[0].iter().map(|p| p.ln()));
        prop_assert!(first.abs() < 1e-9);
    }
}

// ------------------------------------------------------------- sessions

fn questionnaire() -> impl Strategy<Value = Questionnaire> {
    prop::collection::vec(
        prop::collection::vec(prop::collection::btree_set(1usize..12, 1..5), 1..4),
        1..4,
    )
    .prop_map(|subjects| {
        let mut q = Questionnaire::empty("m");
        let mut used = BTreeSet::new();
        for (s, aspects) in subjects.iter().enumerate() {
            let aspects = aspects
                .iter()
                .enumerate()
                .map(|(a, ids)| {
                    used.extend(ids.iter().copied());
                    AspectEntry {
                        aspect: format!("aspect {a}"),
                        question_ids: ids.iter().map(|i| format!("q{i}")).collect(),
                    }
                })
                .collect();
            q.entries.push(SubjectEntry {
                subject: format!("subject {s}"),
                segment_id: format!("m#seg-{}", s + 1),
                aspects,
            });
        }
        for i in used {
            q.questions.insert(
                format!("q{i}"),
                QuestionRecord {
                    text: format!("question {i}?"),
                    segment_id: "m#seg-1".into(),
                    answer_span: Some((i, i + 1)),
                    provenance_count: i % 3,
                },
            );
        }
        q
    })
}

fn events() -> impl Strategy<Value = Vec<Event>> {
    let event = prop_oneof![
        (0usize..5).prop_map(|s| Event::SelectSubject(format!("subject {s}"))),
        prop::collection::vec(0usize..5, 0..3)
            .prop_map(|a| Event::SelectAspects(a.iter().map(|i| format!("aspect {i}")).collect())),
        (0usize..14).prop_map(|i| Event::SelectQuestion(format!("q{i}"))),
        Just(Event::Back),
    ];
    prop::collection::vec(event, 0..30)
}

fn depth(state: SessionState) -> usize {
    match state {
        SessionState::AwaitSubject => 0,
        SessionState::AwaitAspect => 1,
        SessionState::ShowQuestions => 2,
        SessionState::ShowAnswer => 3,
    }
}

proptest! {
    #[test]
    fn sessions_stay_consistent(q in questionnaire(), events in events()) {
        prop_assert!(q.validate(None).is_ok());
        let mut session = Session::new("m");
        for event in &events {
            let before = session.clone();
            match session.step(&q, event) {
                Ok(next) => {
                    let moved = depth(next.state) as isize - depth(before.state) as isize;
                    prop_assert_eq!(moved, if *event == Event::Back { -1 } else { 1 });
                    session = next;
                }
                Err(_) => prop_assert_eq!(&session, &before),
            }
            let view = session.view(&q).unwrap();
            prop_assert_eq!(view.state, session.state);
            match session.state {
                SessionState::AwaitSubject => prop_assert!(session.chosen_subject.is_none()),
                SessionState::AwaitAspect => prop_assert!(session.chosen_aspects.is_empty()),
                SessionState::ShowQuestions => {
                    let entry = q.entry(session.chosen_subject.as_deref().unwrap()).unwrap();
                    let shown: Vec<String> = view.questions.unwrap().into_iter().map(|v| v.question_id).collect();
                    let allowed: Vec<&str> = entry.question_ids();
                    prop_assert!(shown.iter().all(|id| allowed.contains(&id.as_str())));
                    let distinct: BTreeSet<&String> = shown.iter().collect();
                    prop_assert_eq!(distinct.len(), shown.len());
                }
                SessionState::ShowAnswer => {
                    let id = session.chosen_question.clone().unwrap();
                    prop_assert_eq!(view.answer.unwrap().answer_span, q.questions[&id].answer_span);
                }
            }
        }
        // backing out always reaches the start in exactly `depth` steps
        for _ in 0..depth(session.state) {
            session = session.step(&q, &Event::Back).unwrap();
        }
        prop_assert_eq!(session.state, SessionState::AwaitSubject);
        prop_assert!(session.step(&q, &Event::Back).is_err());
    }
}
