//! BIO labels over the two span classes, and conversion between label
//! sequences and spans.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Tag for one question token. Discriminants are the CRF label ids; `O` is 0
/// so that smallest-id tie-breaking favours "no span".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BioLabel {
    #[serde(rename = "O")]
    O = 0,
    #[serde(rename = "B-SUBJ")]
    BSubj = 1,
    #[serde(rename = "I-SUBJ")]
    ISubj = 2,
    #[serde(rename = "B-ASP")]
    BAsp = 3,
    #[serde(rename = "I-ASP")]
    IAsp = 4,
}

/// Span class after collapsing B/I, as reported in evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpanClass {
    Subject,
    Aspect,
    #[serde(rename = "N/A")]
    NotApplicable,
}

impl SpanClass {
    pub const ALL: [SpanClass; 3] = [SpanClass::Subject, SpanClass::Aspect, SpanClass::NotApplicable];

    pub fn as_str(&self) -> &'static str {
        match self {
            SpanClass::Subject => "Subject",
            SpanClass::Aspect => "Aspect",
            SpanClass::NotApplicable => "N/A",
        }
    }
}

impl BioLabel {
    pub const ALL: [BioLabel; 5] = [
        BioLabel::O,
        BioLabel::BSubj,
        BioLabel::ISubj,
        BioLabel::BAsp,
        BioLabel::IAsp,
    ];

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<BioLabel> {
        Self::ALL.get(id).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BioLabel::O => "O",
            BioLabel::BSubj => "B-SUBJ",
            BioLabel::ISubj => "I-SUBJ",
            BioLabel::BAsp => "B-ASP",
            BioLabel::IAsp => "I-ASP",
        }
    }

    pub fn class(self) -> SpanClass {
        match self {
            BioLabel::O => SpanClass::NotApplicable,
            BioLabel::BSubj | BioLabel::ISubj => SpanClass::Subject,
            BioLabel::BAsp | BioLabel::IAsp => SpanClass::Aspect,
        }
    }

    pub fn is_inside(self) -> bool {
        matches!(self, BioLabel::ISubj | BioLabel::IAsp)
    }

    fn begin_of(class: SpanClass) -> BioLabel {
        match class {
            SpanClass::Subject => BioLabel::BSubj,
            SpanClass::Aspect => BioLabel::BAsp,
            SpanClass::NotApplicable => BioLabel::O,
        }
    }

    fn inside_of(class: SpanClass) -> BioLabel {
        match class {
            SpanClass::Subject => BioLabel::ISubj,
            SpanClass::Aspect => BioLabel::IAsp,
            SpanClass::NotApplicable => BioLabel::O,
        }
    }
}

impl fmt::Display for BioLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownLabel(pub String);

impl fmt::Display for UnknownLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown label {:?}", self.0)
    }
}

impl std::error::Error for UnknownLabel {}

impl FromStr for BioLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BioLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

/// Half-open token range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start < end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }
}

/// True when no inside label follows `O`, the sequence start, or a label of
/// the other class.
pub fn is_valid(labels: &[BioLabel]) -> bool {
    labels
        .iter()
        .enumerate()
        .all(|(i, l)| !l.is_inside() || (i > 0 && labels[i - 1] != BioLabel::O && labels[i - 1].class() == l.class()))
}

/// Promotes orphan inside labels to begin labels in place and returns the
/// repaired positions.
pub fn repair(labels: &mut [BioLabel]) -> Vec<usize> {
    let mut repaired = Vec::new();
    for i in 0..labels.len() {
        let l = labels[i];
        let continues = i > 0 && labels[i - 1] != BioLabel::O && labels[i - 1].class() == l.class();
        if l.is_inside() && !continues {
            labels[i] = BioLabel::begin_of(l.class());
            repaired.push(i);
        }
    }
    repaired
}

/// Subject and aspect spans from a label sequence. An orphan inside label
/// opens a new span, so decoded sequences that violate BIO still yield
/// well-formed, non-overlapping spans.
pub fn spans_from_labels(labels: &[BioLabel]) -> (Vec<Span>, Vec<Span>) {
    let mut subjects = Vec::new();
    let mut aspects = Vec::new();
    let mut open: Option<(SpanClass, usize)> = None;

    let mut close = |open: &mut Option<(SpanClass, usize)>, end: usize| {
        if let Some((class, start)) = open.take() {
            match class {
                SpanClass::Subject => subjects.push(Span::new(start, end)),
                SpanClass::Aspect => aspects.push(Span::new(start, end)),
                SpanClass::NotApplicable => {}
            }
        }
    };

    for (i, &label) in labels.iter().enumerate() {
        let class = label.class();
        let extends = label.is_inside() && matches!(open, Some((c, _)) if c == class);
        if !extends {
            close(&mut open, i);
            if class != SpanClass::NotApplicable {
                open = Some((class, i));
            }
        }
    }
    close(&mut open, labels.len());
    (subjects, aspects)
}

/// Label sequence of length `len` encoding the given spans. Spans must lie
/// within `len` and not overlap.
pub fn labels_from_spans(len: usize, subjects: &[Span], aspects: &[Span]) -> Vec<BioLabel> {
    let mut labels = vec![BioLabel::O; len];
    for (spans, class) in [(subjects, SpanClass::Subject), (aspects, SpanClass::Aspect)] {
        for span in spans {
            labels[span.start] = BioLabel::begin_of(class);
            for l in &mut labels[span.start + 1..span.end] {
                *l = BioLabel::inside_of(class);
            }
        }
    }
    labels
}
