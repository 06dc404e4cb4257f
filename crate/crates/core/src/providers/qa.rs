use super::{content_tokens, ProviderError, QaAnswer, QaProvider};
use crate::evaluation::rouge1_f1_tokens;

/// Lexical answerability baseline: confidence is the best ROUGE-1 F1 between
/// the question's content words and any same-width window of the context's
/// content words.
#[derive(Debug, Clone, Copy, Default)]
pub struct OverlapQa;

impl QaProvider for OverlapQa {
    fn answer(&self, question: &str, context: &str) -> Result<QaAnswer, ProviderError> {
        let q = content_tokens(question);
        let c = content_tokens(context);
        if q.is_empty() || c.is_empty() {
            return Ok(QaAnswer {
                answer: String::new(),
                confidence: 0.0,
            });
        }
        let width = q.len().min(c.len());
        let mut best = (0.0, 0);
        for (start, window) in c.windows(width).enumerate() {
            let f = rouge1_f1_tokens(window, &q);
            if f > best.0 {
                best = (f, start);
            }
        }
        Ok(QaAnswer {
            answer: c[best.1..best.1 + width].join(" "),
            confidence: best.0,
        })
    }
}

/// Returns the same confidence for every question.
#[derive(Debug, Clone, Copy)]
pub struct ConstantQa(pub f64);

impl QaProvider for ConstantQa {
    fn answer(&self, _question: &str, _context: &str) -> Result<QaAnswer, ProviderError> {
        Ok(QaAnswer {
            answer: String::new(),
            confidence: self.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verbatim_content_scores_one() {
        let ctx = "A: The budget per unit is twelve euros.\nB: Fine.";
        let a = OverlapQa.answer("What is the budget per unit?", ctx).unwrap();
        assert!((a.confidence - 1.0).abs() < 1e-12, "{a:?}");
        assert_eq!(a.answer, "budget unit");
    }

    #[test]
    fn unrelated_question_scores_zero() {
        let a = OverlapQa
            .answer("Who designed the logo?", "We discussed the budget.")
            .unwrap();
        assert_eq!(a.confidence, 0.0);
    }
}
