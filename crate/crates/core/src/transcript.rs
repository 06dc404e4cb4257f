//! Meeting transcripts, the question-annotation corpus, and the shared
//! tokenizer.
//!
//! # Tokenizer rules
//!
//! [`tokenize`] is a deterministic, rule-based splitter. Rules are applied
//! left to right over the characters of the input:
//!
//! | Input                                   | Rule                                   | Example                      |
//! |-----------------------------------------|----------------------------------------|------------------------------|
//! | whitespace                              | token boundary, never emitted          | `"a  b"` → `a`, `b`           |
//! | letters / digits                        | accumulate into the current word       | `budget`                     |
//! | `-` between a word and an alphanumeric  | kept inside the word                   | `well-known`                 |
//! | `.` or `,` between two digits           | kept inside the number                 | `3.5`, `1,000`               |
//! | `'s 're 've 'll 'd 'm` at a word end    | split off as a clitic token            | `dial's` → `dial`, `'s`       |
//! | `n't` at a word end                     | split off as a clitic token            | `don't` → `do`, `n't`         |
//! | apostrophe inside a word                | kept inside the word                   | `O'Brien`                    |
//! | any other character                     | emitted as a single-character token    | `budget?` → `budget`, `?`     |
//!
//! Case is preserved. `’` is treated like `'`. Joining the output with single
//! spaces and tokenizing again yields the same tokens.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tagger::bio::{self, BioLabel};

#[derive(Debug, Error, PartialEq)]
pub enum TranscriptError {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("transcript has no turns")]
    EmptyTranscript,
}

/// Meeting category used for per-category reporting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Academic,
    Committee,
    Product,
    #[default]
    Other,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Academic,
        Category::Committee,
        Category::Product,
        Category::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Academic => "Academic",
            Category::Committee => "Committee",
            Category::Product => "Product",
            Category::Other => "Other",
        }
    }
}

impl std::str::FromStr for Category {
    type Err = TranscriptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "academic" => Ok(Category::Academic),
            "committee" => Ok(Category::Committee),
            "product" => Ok(Category::Product),
            "other" => Ok(Category::Other),
            _ => Err(TranscriptError::MalformedInput(format!("unknown category {s:?}"))),
        }
    }
}

/// One speaker-attributed utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub index: usize,
    pub speaker: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub meeting_id: String,
    #[serde(default)]
    pub category: Category,
    pub turns: Vec<Turn>,
}

impl Transcript {
    /// Builds a transcript from `(speaker, text)` pairs, numbering turns from 0.
    pub fn new<S, T>(
        meeting_id: impl Into<String>,
        category: Category,
        turns: impl IntoIterator<Item = (S, T)>,
    ) -> Result<Self, TranscriptError>
    where
        S: Into<String>,
        T: Into<String>,
    {
        let turns: Vec<Turn> = turns
            .into_iter()
            .enumerate()
            .map(|(index, (speaker, text))| Turn {
                index,
                speaker: speaker.into(),
                text: text.into(),
            })
            .collect();
        let transcript = Transcript {
            meeting_id: meeting_id.into(),
            category,
            turns,
        };
        transcript.validate()?;
        Ok(transcript)
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    /// Checks the structural invariants: at least one turn, contiguous
    /// indices, nonempty speakers.
    pub fn validate(&self) -> Result<(), TranscriptError> {
        if self.turns.is_empty() {
            return Err(TranscriptError::EmptyTranscript);
        }
        for (i, turn) in self.turns.iter().enumerate() {
            if turn.index != i {
                return Err(TranscriptError::MalformedInput(format!(
                    "turn {i} carries index {}",
                    turn.index
                )));
            }
            if turn.speaker.trim().is_empty() {
                return Err(TranscriptError::MalformedInput(format!(
                    "turn {i} has an empty speaker"
                )));
            }
        }
        Ok(())
    }

    /// Indices of turns with no text. They are legal but flagged.
    pub fn degenerate_turns(&self) -> Vec<usize> {
        self.turns
            .iter()
            .filter(|t| t.text.trim().is_empty())
            .map(|t| t.index)
            .collect()
    }

    /// Text of a half-open turn range, one `SPEAKER: text` line per turn.
    pub fn range_text(&self, start: usize, end: usize) -> String {
        let end = end.min(self.turns.len());
        self.turns[start.min(end)..end]
            .iter()
            .map(|t| format!("{}: {}", t.speaker, t.text))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn full_text(&self) -> String {
        self.range_text(0, self.turns.len())
    }

    pub fn turn_texts(&self) -> Vec<String> {
        self.turns.iter().map(|t| t.text.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranscriptFormat {
    /// `{"meeting_transcripts": [{"speaker", "content"}, ...]}`.
    QmsumJson,
    /// One `SPEAKER<TAB>TEXT` line per turn.
    PlainTurns,
}

impl std::str::FromStr for TranscriptFormat {
    type Err = TranscriptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "qmsum" | "qmsum-json" | "json" => Ok(TranscriptFormat::QmsumJson),
            "plain" | "plain-turns" | "tsv" => Ok(TranscriptFormat::PlainTurns),
            _ => Err(TranscriptError::MalformedInput(format!("unknown format {s:?}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct QmsumDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meeting_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category: Option<Category>,
    meeting_transcripts: Vec<QmsumTurn>,
}

#[derive(Serialize, Deserialize)]
struct QmsumTurn {
    speaker: String,
    content: String,
}

/// Parses a transcript. `meeting_id` is used unless the document carries its
/// own `meeting_id` field (QMSUM JSON extension).
pub fn parse_transcript(raw: &[u8], format: TranscriptFormat, meeting_id: &str) -> Result<Transcript, TranscriptError> {
    let text = std::str::from_utf8(raw).map_err(|e| TranscriptError::MalformedInput(format!("invalid UTF-8: {e}")))?;
    match format {
        TranscriptFormat::QmsumJson => {
            let doc: QmsumDocument =
                serde_json::from_str(text).map_err(|e| TranscriptError::MalformedInput(e.to_string()))?;
            let id = doc.meeting_id.unwrap_or_else(|| meeting_id.to_string());
            Transcript::new(
                id,
                doc.category.unwrap_or_default(),
                doc.meeting_transcripts.into_iter().map(|t| (t.speaker, t.content)),
            )
        }
        TranscriptFormat::PlainTurns => {
            let mut turns = Vec::new();
            for (line_no, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let (speaker, utterance) = line.split_once('\t').ok_or_else(|| {
                    TranscriptError::MalformedInput(format!("line {}: expected SPEAKER<TAB>TEXT", line_no + 1))
                })?;
                turns.push((speaker.to_string(), utterance.to_string()));
            }
            Transcript::new(meeting_id, Category::Other, turns)
        }
    }
}

pub fn serialize_transcript(transcript: &Transcript, format: TranscriptFormat) -> Vec<u8> {
    match format {
        TranscriptFormat::QmsumJson => {
            let doc = QmsumDocument {
                meeting_id: Some(transcript.meeting_id.clone()),
                category: Some(transcript.category),
                meeting_transcripts: transcript
                    .turns
                    .iter()
                    .map(|t| QmsumTurn {
                        speaker: t.speaker.clone(),
                        content: t.text.clone(),
                    })
                    .collect(),
            };
            serde_json::to_vec_pretty(&doc).expect("transcript serializes")
        }
        TranscriptFormat::PlainTurns => {
            let mut out = String::new();
            for t in &transcript.turns {
                out.push_str(&t.speaker);
                out.push('\t');
                out.push_str(&t.text);
                out.push('\n');
            }
            out.into_bytes()
        }
    }
}

const CLITICS: [&str; 6] = ["s", "re", "ve", "ll", "d", "m"];

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '’'
}

/// Splits text into word, clitic, and punctuation tokens. See the module docs
/// for the rule table.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut word = String::new();

    fn flush(word: &mut String, tokens: &mut Vec<String>) {
        if !word.is_empty() {
            tokens.push(std::mem::take(word));
        }
    }

    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        if c.is_whitespace() {
            flush(&mut word, &mut tokens);
            i += 1;
        } else if c.is_alphanumeric() {
            word.push(c);
            i += 1;
        } else if is_apostrophe(c) {
            // letters following the apostrophe, up to the next non-alphanumeric
            let tail_end = chars[i + 1..]
                .iter()
                .position(|ch| !ch.is_alphanumeric())
                .map_or(chars.len(), |p| i + 1 + p);
            let tail: String = chars[i + 1..tail_end].iter().collect();
            let tail_lower = tail.to_lowercase();
            if tail_lower == "t" && word.chars().last().is_some_and(|l| l == 'n' || l == 'N') {
                let n = word.pop().expect("checked nonempty");
                flush(&mut word, &mut tokens);
                tokens.push(format!("{n}{c}{tail}"));
                i = tail_end;
            } else if CLITICS.contains(&tail_lower.as_str()) {
                flush(&mut word, &mut tokens);
                tokens.push(format!("{c}{tail}"));
                i = tail_end;
            } else if !word.is_empty() && next.is_some_and(char::is_alphanumeric) {
                word.push(c);
                i += 1;
            } else {
                flush(&mut word, &mut tokens);
                tokens.push(c.to_string());
                i += 1;
            }
        } else if (c == '-' && !word.is_empty() && next.is_some_and(char::is_alphanumeric))
            || ((c == '.' || c == ',')
                && word.chars().last().is_some_and(|l| l.is_ascii_digit())
                && next.is_some_and(|n| n.is_ascii_digit()))
        {
            // hyphenated words and decimal numbers stay whole
            word.push(c);
            i += 1;
        } else {
            flush(&mut word, &mut tokens);
            tokens.push(c.to_string());
            i += 1;
        }
    }
    flush(&mut word, &mut tokens);
    tokens
}

/// True for tokens made only of punctuation or symbols.
pub fn is_punctuation(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| !c.is_alphanumeric())
}

/// Joins tokens back into readable text: punctuation and clitics attach to
/// the preceding token.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, tok) in tokens.iter().enumerate() {
        let tok = tok.as_ref();
        let attach = i > 0
            && (matches!(tok, "?" | "!" | "." | "," | ";" | ":" | ")" | "%")
                || tok.starts_with('\'')
                || tok.starts_with('’')
                || tok.eq_ignore_ascii_case("n't"));
        let prev_open = i > 0 && matches!(tokens[i - 1].as_ref(), "(" | "$");
        if i > 0 && !attach && !prev_open {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

/// Casefolds and collapses whitespace.
pub fn normalize_text(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// One question annotated with subject and aspect spans in BIO form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedQuestion {
    pub tokens: Vec<String>,
    pub pos: Vec<String>,
    pub labels: Vec<BioLabel>,
}

impl AnnotatedQuestion {
    pub fn new(tokens: Vec<String>, pos: Vec<String>, labels: Vec<BioLabel>) -> Self {
        assert_eq!(tokens.len(), pos.len(), "tokens and POS tags must align");
        assert_eq!(tokens.len(), labels.len(), "tokens and labels must align");
        AnnotatedQuestion { tokens, pos, labels }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn subject_texts(&self) -> Vec<String> {
        let (subjects, _) = bio::spans_from_labels(&self.labels);
        subjects
            .iter()
            .map(|s| detokenize(&self.tokens[s.start..s.end]))
            .collect()
    }

    pub fn aspect_texts(&self) -> Vec<String> {
        let (_, aspects) = bio::spans_from_labels(&self.labels);
        aspects
            .iter()
            .map(|s| detokenize(&self.tokens[s.start..s.end]))
            .collect()
    }
}

/// A repaired BIO violation found while parsing annotations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationWarning {
    pub question: usize,
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct AnnotationSet {
    pub questions: Vec<AnnotatedQuestion>,
    pub warnings: Vec<AnnotationWarning>,
}

/// Parses the CoNLL-style annotation format: one `TOKEN<TAB>POS<TAB>LABEL`
/// line per token, questions separated by blank lines. Orphan `I-x` labels
/// are promoted to `B-x` and reported as warnings.
pub fn parse_annotations(raw: &[u8]) -> Result<AnnotationSet, TranscriptError> {
    let text = std::str::from_utf8(raw).map_err(|e| TranscriptError::MalformedInput(format!("invalid UTF-8: {e}")))?;
    let mut set = AnnotationSet::default();
    let mut tokens = Vec::new();
    let mut pos = Vec::new();
    let mut labels = Vec::new();

    let finish =
        |tokens: &mut Vec<String>, pos: &mut Vec<String>, labels: &mut Vec<BioLabel>, set: &mut AnnotationSet| {
            if tokens.is_empty() {
                return;
            }
            let question = set.questions.len();
            for position in bio::repair(labels) {
                set.warnings.push(AnnotationWarning {
                    question,
                    position,
                    message: format!("orphan inside label promoted to {}", labels[position]),
                });
            }
            set.questions.push(AnnotatedQuestion::new(
                std::mem::take(tokens),
                std::mem::take(pos),
                std::mem::take(labels),
            ));
        };

    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            finish(&mut tokens, &mut pos, &mut labels, &mut set);
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 || fields.iter().any(|f| f.is_empty()) {
            return Err(TranscriptError::MalformedInput(format!(
                "line {}: expected TOKEN<TAB>POS<TAB>LABEL",
                line_no + 1
            )));
        }
        let label: BioLabel = fields[2].parse().map_err(|_| {
            TranscriptError::MalformedInput(format!("line {}: unknown label {:?}", line_no + 1, fields[2]))
        })?;
        tokens.push(fields[0].to_string());
        pos.push(fields[1].to_string());
        labels.push(label);
    }
    finish(&mut tokens, &mut pos, &mut labels, &mut set);
    Ok(set)
}

pub fn serialize_annotations(questions: &[AnnotatedQuestion]) -> String {
    let mut out = String::new();
    for (i, q) in questions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for ((tok, pos), label) in q.tokens.iter().zip(&q.pos).zip(&q.labels) {
            out.push_str(&format!("{tok}\t{pos}\t{label}\n"));
        }
    }
    out
}

/// Distinct meeting ids, or the first duplicate found.
pub fn check_unique_ids<'a>(ids: impl IntoIterator<Item = &'a str>) -> Result<(), TranscriptError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(TranscriptError::MalformedInput(format!("duplicate meeting id {id:?}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn tokenize_rule_table() {
        assert_eq!(toks("What is the budget?"), ["What", "is", "the", "budget", "?"]);
        assert!(toks("").is_empty());
        assert!(toks("   \t\n").is_empty());
        assert_eq!(toks("jog dial's function"), ["jog", "dial", "'s", "function"]);
        assert_eq!(toks("don't"), ["do", "n't"]);
        assert_eq!(toks("we're ready"), ["we", "'re", "ready"]);
        assert_eq!(toks("O'Brien said"), ["O'Brien", "said"]);
        assert_eq!(toks("a well-known tool"), ["a", "well-known", "tool"]);
        assert_eq!(toks("cost 3.5 or 1,000."), ["cost", "3.5", "or", "1,000", "."]);
        assert_eq!(toks("(post-12)"), ["(", "post-12", ")"]);
        assert_eq!(toks("players' views"), ["players", "'", "views"]);
        assert_eq!(toks("end -"), ["end", "-"]);
    }

    #[test]
    fn detokenize_attaches_punctuation_and_clitics() {
        assert_eq!(detokenize(&toks("jog dial's function?")), "jog dial's function?");
        assert_eq!(detokenize(&toks("What is it, then?")), "What is it, then?");
    }

    #[test]
    fn parse_qmsum_json() {
        let raw = br#"{"topic_list": [{"topic": "x"}],
            "meeting_transcripts": [
              {"speaker": "A", "content": "Hello."},
              {"speaker": "B", "content": "Hi there."},
              {"speaker": "A", "content": "Let's start."}]}"#;
        let t = parse_transcript(raw, TranscriptFormat::QmsumJson, "m1").unwrap();
        assert_eq!(t.meeting_id, "m1");
        assert_eq!(t.category, Category::Other);
        assert_eq!(t.turns.iter().map(|t| t.index).collect::<Vec<_>>(), [0, 1, 2]);
        assert_eq!(t.turns[1].text, "Hi there.");
    }

    #[test]
    fn parse_errors() {
        let empty = br#"{"meeting_transcripts": []}"#;
        assert_eq!(
            parse_transcript(empty, TranscriptFormat::QmsumJson, "m"),
            Err(TranscriptError::EmptyTranscript)
        );
        let missing = br#"{"meeting_transcripts": [{"content": "no speaker"}]}"#;
        assert!(matches!(
            parse_transcript(missing, TranscriptFormat::QmsumJson, "m"),
            Err(TranscriptError::MalformedInput(_))
        ));
        let blank_speaker = br#"{"meeting_transcripts": [{"speaker": " ", "content": "x"}]}"#;
        assert!(matches!(
            parse_transcript(blank_speaker, TranscriptFormat::QmsumJson, "m"),
            Err(TranscriptError::MalformedInput(_))
        ));
        assert!(matches!(
            parse_transcript(b"\xff\xfe", TranscriptFormat::PlainTurns, "m"),
            Err(TranscriptError::MalformedInput(_))
        ));
        assert!(matches!(
            parse_transcript(b"no tab here\n", TranscriptFormat::PlainTurns, "m"),
            Err(TranscriptError::MalformedInput(_))
        ));
        assert_eq!(
            parse_transcript(b"\n\n", TranscriptFormat::PlainTurns, "m"),
            Err(TranscriptError::EmptyTranscript)
        );
    }

    #[test]
    fn plain_turns_and_degenerate_flags() {
        let t = parse_transcript(b"Chair\tWelcome all.\nBob\t\n", TranscriptFormat::PlainTurns, "m").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.degenerate_turns(), [1]);
    }

    #[test]
    fn duplicate_meeting_ids_rejected() {
        assert!(check_unique_ids(["a", "b"]).is_ok());
        assert!(check_unique_ids(["a", "b", "a"]).is_err());
    }

    const Q1: &str = "What\tWP\tO\nis\tVBZ\tO\nthe\tDT\tO\narrow\tNN\tB-ASP\nsymbol\tNN\tI-ASP\n\
on\tIN\tO\nthe\tDT\tO\nremote\tNN\tB-SUBJ\ncontrol\tNN\tI-SUBJ\nfor\tIN\tO\n?\t.\tO\n";

    #[test]
    fn annotation_example_spans() {
        let set = parse_annotations(Q1.as_bytes()).unwrap();
        assert_eq!(set.questions.len(), 1);
        assert!(set.warnings.is_empty());
        let q = &set.questions[0];
        assert_eq!(q.subject_texts(), ["remote control"]);
        assert_eq!(q.aspect_texts(), ["arrow symbol"]);
    }

    #[test]
    fn all_o_question_is_legal() {
        let set = parse_annotations(b"Who\tWP\tO\nattended\tVBD\tO\n?\t.\tO\n").unwrap();
        assert!(set.questions[0].subject_texts().is_empty());
        assert!(set.warnings.is_empty());
    }

    #[test]
    fn orphan_inside_label_repaired() {
        let raw = b"budget\tNN\tI-SUBJ\nplan\tNN\tI-SUBJ\n\nthe\tDT\tO\ncolor\tNN\tI-ASP\n";
        let set = parse_annotations(raw).unwrap();
        assert_eq!(set.questions.len(), 2);
        assert_eq!(set.questions[0].labels, [BioLabel::BSubj, BioLabel::ISubj]);
        assert_eq!(set.questions[1].labels, [BioLabel::O, BioLabel::BAsp]);
        assert_eq!(set.warnings.len(), 2);
        assert_eq!((set.warnings[0].question, set.warnings[0].position), (0, 0));
        assert_eq!((set.warnings[1].question, set.warnings[1].position), (1, 1));
    }

    #[test]
    fn malformed_annotation_lines() {
        assert!(parse_annotations(b"word\tNN\n").is_err());
        assert!(parse_annotations(b"word\tNN\tB-TOPIC\n").is_err());
    }

    fn transcript_strategy() -> impl Strategy<Value = Transcript> {
        (
            "[a-z0-9_-]{1,12}",
            prop::sample::select(Category::ALL.to_vec()),
            prop::collection::vec(("[A-Za-z][A-Za-z ]{0,10}", "\\PC{0,40}"), 1..12),
        )
            .prop_map(|(id, cat, turns)| Transcript::new(id, cat, turns).unwrap())
    }

    proptest! {
        #[test]
        fn qmsum_round_trip(t in transcript_strategy()) {
            let bytes = serialize_transcript(&t, TranscriptFormat::QmsumJson);
            let back = parse_transcript(&bytes, TranscriptFormat::QmsumJson, "ignored").unwrap();
            prop_assert_eq!(back, t);
        }

        #[test]
        fn plain_round_trip(turns in prop::collection::vec(("[A-Za-z][A-Za-z ]{0,10}", "[^\t\r\n]{0,40}"), 1..12)) {
            let t = Transcript::new("m", Category::Other, turns).unwrap();
            let bytes = serialize_transcript(&t, TranscriptFormat::PlainTurns);
            let back = parse_transcript(&bytes, TranscriptFormat::PlainTurns, "m").unwrap();
            prop_assert_eq!(back, t);
        }

        #[test]
        fn tokenize_idempotent_under_rejoin(s in "\\PC{0,80}") {
            let first = tokenize(&s);
            prop_assert!(first.iter().all(|t| !t.is_empty() && !t.chars().any(char::is_whitespace)));
            let again = tokenize(&first.join(" "));
            prop_assert_eq!(again, first);
        }

        #[test]
        fn parsed_annotations_satisfy_bio(labels in prop::collection::vec(0usize..5, 1..15)) {
            let mut raw = String::new();
            for (i, l) in labels.iter().enumerate() {
                raw.push_str(&format!("w{i}\tNN\t{}\n", BioLabel::ALL[*l]));
            }
            let set = parse_annotations(raw.as_bytes()).unwrap();
            prop_assert!(bio::is_valid(&set.questions[0].labels));
        }
    }
}
