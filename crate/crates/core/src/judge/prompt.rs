//! Rubric prompt construction. The prompt text is a fixed protocol
//! constant: builds are byte-stable for the same project so responses can
//! be cached and replayed.

use super::JudgeError;
use crate::corpus::Project;

pub const SYSTEM_PROMPT: &str = "You are a rigorous and efficient evaluation assistant for rating creativity. Your task is to provide scores and feedback systematically. Follow the format strictly: first provide the scores for Novelty and Usefulness, then the rationale for each score in under 100 words. Ensure that feedback is clear, concise, and aligned with the rubric provided, avoiding unnecessary commentary.";

const USER_TEMPLATE_HEAD: &str = "Task Description: You are tasked with evaluating a project description based on two criteria: Novelty and Usefulness, using a 5-point Likert scale.

1. Write the scores for Novelty and Usefulness as integers between 1 and 5, strictly referring to the score rubric.
2. Provide concise feedback (within 50 words) justifying each score.
3. Format your output as follows: 'Novelty: [RESULT] (1-5) Usefulness: [RESULT] (1-5) Feedback: [Your feedback here]'.
4. Do not include any other text or explanation.

Evaluation Criteria:
Novelty: Evaluate how unique and original the project's concept, approach, or solution is. Consider whether it introduces new ideas, methods, or perspectives that differ significantly from existing ones.
Usefulness: Evaluate how practical and appropriate the project is in addressing its targeted problem or challenge. Consider whether it effectively solves a real-world issue or meets a specific need.

Project Description to Evaluate:
";

/// Marker appended when a description exceeds the character budget.
pub const TRUNCATION_MARKER: &str = "\n[truncated]";

/// Default character budget for the inserted description.
pub const DEFAULT_CHAR_BUDGET: usize = 6_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JudgePrompt {
    pub system_text: String,
    pub user_text: String,
}

/// The text judged for a project: `what_it_does` when present and
/// non-empty, otherwise all description fields concatenated in key order.
pub fn judged_description(project: &Project) -> Option<String> {
    if let Some(text) = project.description_fields.get("what_it_does") {
        if !text.trim().is_empty() {
            return Some(text.clone());
        }
    }
    let joined = project
        .description_fields
        .values()
        .map(String::as_str)
        .filter(|t| !t.trim().is_empty())
        .collect::<Vec<_>>()
        .join("\n\n");
    if joined.trim().is_empty() {
        None
    } else {
        Some(joined)
    }
}

/// Builds the rubric prompt. The description is inserted verbatim (no
/// interpolation applies inside it) and truncated to `char_budget`
/// characters with a marker when longer.
pub fn build_prompt(project: &Project, char_budget: usize) -> Result<JudgePrompt, JudgeError> {
    let description =
        judged_description(project).ok_or_else(|| JudgeError::EmptyDescription(project.id.clone()))?;
    let description = if description.chars().count() > char_budget {
        let mut clipped: String = description.chars().take(char_budget).collect();
        clipped.push_str(TRUNCATION_MARKER);
        clipped
    } else {
        description
    };
    Ok(JudgePrompt {
        system_text: SYSTEM_PROMPT.to_string(),
        user_text: format!("{USER_TEMPLATE_HEAD}{description}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn project(fields: &[(&str, &str)]) -> Project {
        Project {
            id: "p1".into(),
            title: String::new(),
            creator_ids: vec![],
            hackathon_entries: vec![],
            description_fields: fields
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect::<BTreeMap<_, _>>(),
            repo_links: vec![],
            year: None,
        }
    }

    #[test]
    fn prompt_is_byte_stable() {
        let p = project(&[("what_it_does", "Counts birds with a microphone.")]);
        let a = build_prompt(&p, DEFAULT_CHAR_BUDGET).unwrap();
        let b = build_prompt(&p, DEFAULT_CHAR_BUDGET).unwrap();
        assert_eq!(a, b);
        assert!(a.system_text.starts_with("You are a rigorous and efficient"));
        assert!(a.user_text.ends_with("Counts birds with a microphone."));
    }

    #[test]
    fn braces_and_quotes_pass_through_verbatim() {
        let tricky = r#"Uses {braces}, "quotes" and ${interpolation-lookalikes}."#;
        let p = project(&[("what_it_does", tricky)]);
        let prompt = build_prompt(&p, DEFAULT_CHAR_BUDGET).unwrap();
        assert!(prompt.user_text.contains(tricky));
    }

    #[test]
    fn long_description_is_truncated_with_marker() {
        let long = "x".repeat(10_000);
        let p = project(&[("what_it_does", &long)]);
        let prompt = build_prompt(&p, DEFAULT_CHAR_BUDGET).unwrap();
        let inserted = prompt.user_text.rsplit("Evaluate:\n").next().unwrap();
        assert!(inserted.ends_with(TRUNCATION_MARKER));
        assert_eq!(
            inserted.chars().count(),
            DEFAULT_CHAR_BUDGET + TRUNCATION_MARKER.chars().count()
        );
    }

    #[test]
    fn fallback_concatenates_fields_in_key_order() {
        let p = project(&[("inspiration", "A"), ("other", "B")]);
        assert_eq!(judged_description(&p).unwrap(), "A\n\nB");
    }

    #[test]
    fn empty_description_is_an_error() {
        let p = project(&[("what_it_does", "  ")]);
        assert!(matches!(
            build_prompt(&p, DEFAULT_CHAR_BUDGET),
            Err(JudgeError::EmptyDescription(_))
        ));
    }
}
