//! The questionnaire tree (subject → aspects → questions → answer span) and
//! the drill-down session over it.

use std::collections::HashSet;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::providers::{LocatorProvider, TurnRange};
use crate::segmentation::Segment;
use crate::subject_network::{NormalizationResult, GENERAL_ASPECT};
use crate::tagger::TaggedQuestion;
use crate::transcript::{normalize_text, Transcript};

pub const QUESTIONNAIRE_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuestionnaireError {
    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),
    #[error("unknown subject {0:?}")]
    UnknownSubject(String),
    #[error("unknown aspect {0:?}")]
    UnknownAspect(String),
    #[error("unknown question {0:?}")]
    UnknownQuestion(String),
    #[error("{event} is not allowed in state {state:?}")]
    IllegalTransition { state: SessionState, event: String },
    #[error("invalid questionnaire: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectEntry {
    pub aspect: String,
    pub question_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectEntry {
    pub subject: String,
    pub segment_id: String,
    pub aspects: Vec<AspectEntry>,
}

impl SubjectEntry {
    /// Distinct question ids under this subject, in aspect order.
    pub fn question_ids(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.aspects
            .iter()
            .flat_map(|a| a.question_ids.iter())
            .filter(|id| seen.insert(id.as_str()))
            .map(String::as_str)
            .collect()
    }

    pub fn aspect(&self, name: &str) -> Option<&AspectEntry> {
        self.aspects.iter().find(|a| a.aspect == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub text: String,
    pub segment_id: String,
    pub answer_span: Option<TurnRange>,
    /// Number of generation calls that produced the question.
    #[serde(default)]
    pub provenance_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Questionnaire {
    pub version: u32,
    pub meeting_id: String,
    pub entries: Vec<SubjectEntry>,
    pub questions: IndexMap<String, QuestionRecord>,
}

impl Questionnaire {
    pub fn empty(meeting_id: &str) -> Self {
        Questionnaire {
            version: QUESTIONNAIRE_VERSION,
            meeting_id: meeting_id.to_string(),
            entries: vec![],
            questions: IndexMap::new(),
        }
    }

    pub fn entry(&self, subject: &str) -> Option<&SubjectEntry> {
        self.entries.iter().find(|e| e.subject == subject)
    }

    pub fn subjects(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.subject.clone()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("questionnaire serializes") + "\n"
    }

    /// Parses and validates. `num_turns`, when known, bounds answer spans.
    pub fn from_json(text: &str, num_turns: Option<usize>) -> Result<Self, QuestionnaireError> {
        let q: Questionnaire = serde_json::from_str(text).map_err(|e| QuestionnaireError::Invalid(e.to_string()))?;
        q.validate(num_turns)?;
        Ok(q)
    }

    /// Checks the structural invariants: known version, unique subjects,
    /// aspect references resolve, every question referenced, spans well
    /// formed and inside the transcript.
    pub fn validate(&self, num_turns: Option<usize>) -> Result<(), QuestionnaireError> {
        let invalid = |m: String| Err(QuestionnaireError::Invalid(m));
        if self.version != QUESTIONNAIRE_VERSION {
            return invalid(format!("unsupported version {}", self.version));
        }
        let mut subjects = HashSet::new();
        let mut referenced = HashSet::new();
        for e in &self.entries {
            if !subjects.insert(normalize_text(&e.subject)) {
                return invalid(format!("duplicate subject {:?}", e.subject));
            }
            if e.aspects.is_empty() {
                return invalid(format!("subject {:?} has no aspects", e.subject));
            }
            for a in &e.aspects {
                if a.question_ids.is_empty() {
                    return invalid(format!("aspect {:?} has no questions", a.aspect));
                }
                for id in &a.question_ids {
                    if !self.questions.contains_key(id) {
                        return invalid(format!("aspect {:?} references unknown question {id}", a.aspect));
                    }
                    referenced.insert(id.as_str());
                }
            }
        }
        for (id, q) in &self.questions {
            if !referenced.contains(id.as_str()) {
                return invalid(format!("question {id} is not under any aspect"));
            }
            if let Some((s, e)) = q.answer_span {
                if s >= e || num_turns.is_some_and(|n| e > n) {
                    return invalid(format!("question {id} has answer span [{s}, {e})"));
                }
            }
        }
        Ok(())
    }
}

/// Builds the questionnaire.
///
/// `results[i]` and `tagged[i]` belong to `segments[i]`; a `None` result
/// (no subjects) contributes no entry. Entries follow segment order. A
/// subject equal (after casefolding) to an earlier entry's gets the segment
/// ordinal appended, as in `"Design (2)"`. Questions are renumbered `q1, q2,
/// …` in entry order and located with `locator`; the first located range is
/// the answer span, and a locator failure leaves the span empty.
pub fn assemble(
    transcript: &Transcript,
    segments: &[Segment],
    results: &[Option<NormalizationResult>],
    tagged: &[Vec<TaggedQuestion>],
    locator: &dyn LocatorProvider,
) -> Result<(Questionnaire, Vec<String>), QuestionnaireError> {
    if segments.len() != results.len() || segments.len() != tagged.len() {
        return Err(QuestionnaireError::InconsistentInputs(format!(
            "{} segments, {} normalization results, {} tagged sets",
            segments.len(),
            results.len(),
            tagged.len()
        )));
    }
    let mut order: Vec<usize> = (0..segments.len()).collect();
    order.sort_by_key(|&i| (segments[i].start, i));

    let mut q = Questionnaire::empty(&transcript.meeting_id);
    let mut used_subjects = HashSet::new();
    let mut pending: Vec<(String, String, String, usize)> = Vec::new();

    for i in order {
        let segment = &segments[i];
        if segment.meeting_id != transcript.meeting_id {
            return Err(QuestionnaireError::InconsistentInputs(format!(
                "segment {} belongs to meeting {}",
                segment.segment_id, segment.meeting_id
            )));
        }
        let Some(result) = &results[i] else { continue };
        if result.segment_id != segment.segment_id {
            return Err(QuestionnaireError::InconsistentInputs(format!(
                "normalization result for {} paired with segment {}",
                result.segment_id, segment.segment_id
            )));
        }
        let by_local: IndexMap<&str, &TaggedQuestion> = tagged[i].iter().map(|t| (t.question_id.as_str(), t)).collect();

        let mut subject = result.s_norm.subject_text.clone();
        if !used_subjects.insert(normalize_text(&subject)) {
            subject = format!("{subject} ({})", segment.ordinal());
            used_subjects.insert(normalize_text(&subject));
        }

        // global ids follow the segment's tagged-question order
        let mut local_to_global: IndexMap<&str, String> = IndexMap::new();
        let in_map: HashSet<&str> = result.aspect_map.values().flatten().map(String::as_str).collect();
        for t in &tagged[i] {
            if in_map.contains(t.question_id.as_str()) {
                let id = format!("q{}", q.questions.len() + pending.len() + 1);
                pending.push((
                    id.clone(),
                    t.text.clone(),
                    segment.segment_id.clone(),
                    t.provenance_count,
                ));
                local_to_global.insert(t.question_id.as_str(), id);
            }
        }
        let mut aspects = Vec::new();
        for (aspect, ids) in &result.aspect_map {
            let mut question_ids = Vec::new();
            for local in ids {
                if !by_local.contains_key(local.as_str()) {
                    return Err(QuestionnaireError::InconsistentInputs(format!(
                        "aspect {aspect:?} references unknown question {local}"
                    )));
                }
                question_ids.push(local_to_global[local.as_str()].clone());
            }
            aspects.push(AspectEntry {
                aspect: aspect.clone(),
                question_ids,
            });
        }
        q.entries.push(SubjectEntry {
            subject,
            segment_id: segment.segment_id.clone(),
            aspects,
        });
        for (id, text, segment_id, provenance_count) in pending.drain(..) {
            q.questions.insert(
                id,
                QuestionRecord {
                    text,
                    segment_id,
                    answer_span: None,
                    provenance_count,
                },
            );
        }
    }

    let turns = transcript.turn_texts();
    let n = turns.len();
    let located: Vec<Result<Option<TurnRange>, String>> = q
        .questions
        .par_values()
        .map(|rec| match locator.locate(&rec.text, &turns) {
            Ok(ranges) => Ok(ranges
                .into_iter()
                .map(|(s, e)| (s.min(n), e.min(n)))
                .find(|(s, e)| s < e)),
            Err(e) => Err(e.to_string()),
        })
        .collect();
    let mut warnings = Vec::new();
    for ((id, rec), span) in q.questions.iter_mut().zip(located) {
        match span {
            Ok(span) => rec.answer_span = span,
            Err(e) => {
                warn!(question = %id, error = %e, "locator failed; question kept without answer span");
                warnings.push(format!("{id}: locator failed: {e}"));
            }
        }
    }
    Ok((q, warnings))
}

/// Questions under `entry` ranked for the chosen aspects.
///
/// Questions matching more chosen aspects come first, then questions
/// generated by more calls, then questionnaire order. With no chosen
/// aspects every question of the entry is returned, `(general)` ones first.
pub fn rank_questions(
    questionnaire: &Questionnaire,
    entry: &SubjectEntry,
    chosen_aspects: &[String],
) -> Result<Vec<String>, QuestionnaireError> {
    let chosen: Vec<&AspectEntry> = chosen_aspects
        .iter()
        .map(|a| {
            entry
                .aspect(a)
                .ok_or_else(|| QuestionnaireError::UnknownAspect(a.clone()))
        })
        .collect::<Result<_, _>>()?;
    let eligible: Vec<&str> = if chosen.is_empty() {
        entry.question_ids()
    } else {
        let mut seen = HashSet::new();
        chosen
            .iter()
            .flat_map(|a| a.question_ids.iter())
            .filter(|id| seen.insert(id.as_str()))
            .map(String::as_str)
            .collect()
    };
    let general: HashSet<&str> = entry
        .aspect(GENERAL_ASPECT)
        .map(|a| a.question_ids.iter().map(String::as_str).collect())
        .unwrap_or_default();
    let key = |id: &str| {
        let matches = if chosen.is_empty() {
            usize::from(general.contains(id))
        } else {
            chosen.iter().filter(|a| a.question_ids.iter().any(|x| x == id)).count()
        };
        let provenance = questionnaire.questions.get(id).map_or(0, |r| r.provenance_count);
        let position = questionnaire.questions.get_index_of(id).unwrap_or(usize::MAX);
        (std::cmp::Reverse(matches), std::cmp::Reverse(provenance), position)
    };
    let mut ranked = eligible;
    ranked.sort_by_key(|id| key(id));
    Ok(ranked.into_iter().map(String::from).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SessionState {
    AwaitSubject,
    AwaitAspect,
    ShowQuestions,
    ShowAnswer,
}

/// User input driving a [`Session`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Event {
    SelectSubject(String),
    SelectAspects(Vec<String>),
    SelectQuestion(String),
    Back,
}

impl Event {
    fn name(&self) -> &'static str {
        match self {
            Event::SelectSubject(_) => "SelectSubject",
            Event::SelectAspects(_) => "SelectAspects",
            Event::SelectQuestion(_) => "SelectQuestion",
            Event::Back => "Back",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub state: SessionState,
    /// Meeting whose questionnaire this session explores.
    pub meeting_id: String,
    pub chosen_subject: Option<String>,
    pub chosen_aspects: Vec<String>,
    pub chosen_question: Option<String>,
}

impl Session {
    pub fn new(meeting_id: &str) -> Self {
        Session {
            state: SessionState::AwaitSubject,
            meeting_id: meeting_id.to_string(),
            chosen_subject: None,
            chosen_aspects: vec![],
            chosen_question: None,
        }
    }

    fn entry<'q>(&self, q: &'q Questionnaire) -> Result<&'q SubjectEntry, QuestionnaireError> {
        let s = self.chosen_subject.as_deref().unwrap_or_default();
        q.entry(s)
            .ok_or_else(|| QuestionnaireError::UnknownSubject(s.to_string()))
    }

    /// Ranked question ids for the current subject and aspects.
    pub fn ranked_questions(&self, q: &Questionnaire) -> Result<Vec<String>, QuestionnaireError> {
        rank_questions(q, self.entry(q)?, &self.chosen_aspects)
    }

    /// The state after `event`. `self` is left untouched, so an error
    /// never changes the session.
    pub fn step(&self, q: &Questionnaire, event: &Event) -> Result<Session, QuestionnaireError> {
        if q.meeting_id != self.meeting_id {
            return Err(QuestionnaireError::InconsistentInputs(format!(
                "session is for meeting {}, questionnaire for {}",
                self.meeting_id, q.meeting_id
            )));
        }
        let mut next = self.clone();
        match (self.state, event) {
            (SessionState::AwaitSubject, Event::SelectSubject(s)) => {
                if q.entry(s).is_none() {
                    return Err(QuestionnaireError::UnknownSubject(s.clone()));
                }
                next.state = SessionState::AwaitAspect;
                next.chosen_subject = Some(s.clone());
            }
            (SessionState::AwaitAspect, Event::SelectAspects(aspects)) => {
                let entry = self.entry(q)?;
                let mut chosen: Vec<String> = Vec::new();
                for a in aspects {
                    if entry.aspect(a).is_none() {
                        return Err(QuestionnaireError::UnknownAspect(a.clone()));
                    }
                    if !chosen.contains(a) {
                        chosen.push(a.clone());
                    }
                }
                next.state = SessionState::ShowQuestions;
                next.chosen_aspects = chosen;
            }
            (SessionState::ShowQuestions, Event::SelectQuestion(id)) => {
                if !self.ranked_questions(q)?.contains(id) {
                    return Err(QuestionnaireError::UnknownQuestion(id.clone()));
                }
                next.state = SessionState::ShowAnswer;
                next.chosen_question = Some(id.clone());
            }
            (SessionState::AwaitAspect, Event::Back) => {
                next.state = SessionState::AwaitSubject;
                next.chosen_subject = None;
            }
            (SessionState::ShowQuestions, Event::Back) => {
                next.state = SessionState::AwaitAspect;
                next.chosen_aspects.clear();
            }
            (SessionState::ShowAnswer, Event::Back) => {
                next.state = SessionState::ShowQuestions;
                next.chosen_question = None;
            }
            (state, event) => {
                return Err(QuestionnaireError::IllegalTransition {
                    state,
                    event: event.name().to_string(),
                })
            }
        }
        Ok(next)
    }

    /// What a client should show in the current state.
    pub fn view(&self, q: &Questionnaire) -> Result<SessionView, QuestionnaireError> {
        let mut view = SessionView {
            state: self.state,
            subject: self.chosen_subject.clone(),
            chosen_aspects: self.chosen_aspects.clone(),
            subjects: None,
            aspects: None,
            questions: None,
            answer: None,
        };
        match self.state {
            SessionState::AwaitSubject => view.subjects = Some(q.subjects()),
            SessionState::AwaitAspect => {
                view.aspects = Some(self.entry(q)?.aspects.iter().map(|a| a.aspect.clone()).collect())
            }
            SessionState::ShowQuestions => {
                view.questions = Some(
                    self.ranked_questions(q)?
                        .into_iter()
                        .map(|id| QuestionView {
                            text: q.questions[&id].text.clone(),
                            answer_span: q.questions[&id].answer_span,
                            question_id: id,
                        })
                        .collect(),
                )
            }
            SessionState::ShowAnswer => {
                let id = self.chosen_question.clone().unwrap_or_default();
                let rec = q
                    .questions
                    .get(&id)
                    .ok_or_else(|| QuestionnaireError::UnknownQuestion(id.clone()))?;
                view.answer = Some(QuestionView {
                    question_id: id,
                    text: rec.text.clone(),
                    answer_span: rec.answer_span,
                });
            }
        }
        Ok(view)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionView {
    pub question_id: String,
    pub text: String,
    pub answer_span: Option<TurnRange>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionView {
    pub state: SessionState,
    pub subject: Option<String>,
    pub chosen_aspects: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subjects: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aspects: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub questions: Option<Vec<QuestionView>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub answer: Option<QuestionView>,
}
