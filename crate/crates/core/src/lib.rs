//! Preference-driven exploration of meeting transcripts.
//!
//! A transcript is split into topical segments, questions are over-generated
//! for every segment, each question is tagged with its subjects and aspects,
//! the subjects of a segment are normalized to one representative, and the
//! result is assembled into a questionnaire a user can drill into:
//! subject, then aspects, then a ranked question, then the turns that answer
//! it. The [`evaluation`] module measures how much of the meeting a
//! questionnaire reaches and how answerable its questions are.
//!
//! Every model-backed step goes through a provider trait in [`providers`],
//! with HTTP clients for real services and deterministic local stand-ins.

pub mod evaluation;
pub mod pipeline;
pub mod providers;
pub mod question_gen;
pub mod questionnaire;
pub mod segmentation;
pub mod subject_network;
pub mod tagger;
pub mod transcript;
