//! Tolerant extraction of rubric scores from model responses.

use std::sync::LazyLock;

use regex::Regex;

use super::JudgeError;

/// First integer after the dimension label, skipping `[RESULT]` markers,
/// markdown emphasis and a literal unfilled `(1-5)` hint. An optional `/5`
/// suffix is tolerated.
fn score_pattern(label: &str) -> Regex {
    Regex::new(&format!(
        r"(?i)\*{{0,2}}{label}\*{{0,2}}\s*[:\-]?\s*(?:\[result\]\s*)?(?:\(1\s*-\s*5\)\s*)?\*{{0,2}}\s*(\d{{1,2}})(?:\s*/\s*5)?"
    ))
    .unwrap()
}

static NOVELTY: LazyLock<Regex> = LazyLock::new(|| score_pattern("novelty"));
static USEFULNESS: LazyLock<Regex> = LazyLock::new(|| score_pattern("usefulness"));
static FEEDBACK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?is)\*{0,2}feedback\*{0,2}\s*[:\-]?\s*\*{0,2}\s*(.*)").unwrap());

fn extract_score(raw: &str, re: &Regex, dimension: &str) -> Result<u8, JudgeError> {
    let capture = re.captures(raw).ok_or_else(|| JudgeError::ParseFailure {
        detail: format!("no {dimension} score found"),
        raw: raw.to_string(),
    })?;
    let value: u32 = capture[1].parse().map_err(|_| JudgeError::ParseFailure {
        detail: format!("unreadable {dimension} score"),
        raw: raw.to_string(),
    })?;
    if (1..=5).contains(&value) {
        Ok(value as u8)
    } else {
        Err(JudgeError::ScoreOutOfRange {
            dimension: dimension.to_string(),
            value,
        })
    }
}

/// Parses a raw model response into (novelty, usefulness, feedback).
/// Never panics; any input yields scores or a typed failure.
pub fn parse_judgment(raw: &str) -> Result<(u8, u8, String), JudgeError> {
    let novelty = extract_score(raw, &NOVELTY, "novelty")?;
    let usefulness = extract_score(raw, &USEFULNESS, "usefulness")?;
    let feedback = FEEDBACK
        .captures(raw)
        .map(|c| c[1].trim().to_string())
        .unwrap_or_default();
    Ok((novelty, usefulness, feedback))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_format() {
        let (n, u, f) = parse_judgment("Novelty: 4 Usefulness: 3 Feedback: solid.").unwrap();
        assert_eq!((n, u), (4, 3));
        assert_eq!(f, "solid.");
    }

    #[test]
    fn result_marker_and_newlines() {
        let raw = "Novelty: [RESULT] 5\nUsefulness: [RESULT] 2\nFeedback: original but impractical";
        let (n, u, f) = parse_judgment(raw).unwrap();
        assert_eq!((n, u), (5, 2));
        assert_eq!(f, "original but impractical");
    }

    #[test]
    fn slash_five_and_markdown_variants() {
        let raw = "**Novelty:** 3/5\n**Usefulness**: 4/5\n**Feedback:** fine";
        let (n, u, f) = parse_judgment(raw).unwrap();
        assert_eq!((n, u), (3, 4));
        assert_eq!(f, "fine");
    }

    #[test]
    fn unfilled_template_hint_is_skipped() {
        let raw = "Novelty: (1-5) 2 Usefulness: (1-5) 5 Feedback: ok";
        let (n, u, _) = parse_judgment(raw).unwrap();
        assert_eq!((n, u), (2, 5));
    }

    #[test]
    fn first_match_wins() {
        let raw = "Novelty: 2 ... later I reconsider, Novelty: 5. Usefulness: 1";
        let (n, u, _) = parse_judgment(raw).unwrap();
        assert_eq!((n, u), (2, 1));
    }

    #[test]
    fn free_text_is_a_parse_failure() {
        assert!(matches!(
            parse_judgment("I think this is great!"),
            Err(JudgeError::ParseFailure { .. })
        ));
    }

    #[test]
    fn literal_unfilled_template_fails() {
        let raw = "Novelty: [RESULT] (1-5) Usefulness: [RESULT] (1-5) Feedback: [Your feedback here]";
        assert!(parse_judgment(raw).is_err());
    }

    #[test]
    fn out_of_range_score_is_typed() {
        assert!(matches!(
            parse_judgment("Novelty: 7 Usefulness: 3"),
            Err(JudgeError::ScoreOutOfRange { value: 7, .. })
        ));
    }

    #[test]
    fn missing_feedback_is_empty() {
        let (_, _, f) = parse_judgment("Novelty: 1 Usefulness: 1").unwrap();
        assert_eq!(f, "");
    }
}
