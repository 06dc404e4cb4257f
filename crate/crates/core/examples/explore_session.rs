//! Walking the interactive questionnaire.
//!
//! A session moves from choosing a subject, to choosing aspects, to a ranked
//! question list, to one question's answer span in the transcript. `Back`
//! undoes one step. Sessions are immutable values: every step returns a new
//! session, and a rejected event leaves the old one as it was.
//!
//! ```text
//! cargo run --release -p preme-core --example explore_session
//! ```

use preme_core::pipeline::{self, Workspace};
use preme_core::questionnaire::{Event, Session};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("preme-explore");
    let outcome = pipeline::demo(&dir)?;
    let ws = Workspace::new(&dir);
    let q = ws.load_questionnaire(&outcome.job.meeting_id)?;
    let transcript = ws.load_transcript(&outcome.job.meeting_id)?;

    let mut session = Session::new(&q.meeting_id);
    println!("subjects: {:?}", session.view(&q)?.subjects.unwrap_or_default());

    let subject = q.entries[0].subject.clone();
    session = session.step(&q, &Event::SelectSubject(subject.clone()))?;
    let aspects = session.view(&q)?.aspects.unwrap_or_default();
    println!("\n> {subject}\naspects: {aspects:?}");

    let chosen: Vec<String> = aspects.iter().skip(1).take(2).cloned().collect();
    session = session.step(&q, &Event::SelectAspects(chosen.clone()))?;
    let questions = session.view(&q)?.questions.unwrap_or_default();
    println!("\n> {chosen:?}\nquestions, best match first:");
    for v in questions.iter().take(5) {
        println!("  {:<5} {}", v.question_id, v.text);
    }

    // a question id that is not in the list is refused
    let refused = session.step(&q, &Event::SelectQuestion("q9999".into()));
    println!("\nselecting an unknown question: {}", refused.unwrap_err());

    session = session.step(&q, &Event::SelectQuestion(questions[0].question_id.clone()))?;
    let answer = session.view(&q)?.answer.expect("showing an answer");
    println!("\n> {}", answer.text);
    match answer.answer_span {
        Some((start, end)) => {
            for turn in &transcript.turns[start..end] {
                println!("  [{}] {}: {}", turn.index, turn.speaker, turn.text);
            }
        }
        None => println!("  no answer span was located for this question"),
    }

    for _ in 0..3 {
        session = session.step(&q, &Event::Back)?;
        println!("back -> {:?}", session.state);
    }
    Ok(())
}
