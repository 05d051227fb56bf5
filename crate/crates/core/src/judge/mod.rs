//! LLM-as-a-judge pipeline: rubric prompts, a jury of chat endpoints,
//! score parsing, score distributions and description distances.

mod embed;
mod endpoint;
mod parse;
mod prompt;

pub use embed::{cosine, description_distances, DescriptionDistances, Embedder, HashEmbedder};
pub use endpoint::{
    load_model_configs, ChatEndpoint, HttpEndpoint, JudgeRequest, ModelConfig, ReplayEndpoint,
    REPROMPT_SUFFIX,
};
pub use parse::parse_judgment;
pub use prompt::{
    build_prompt, judged_description, JudgePrompt, DEFAULT_CHAR_BUDGET, SYSTEM_PROMPT,
    TRUNCATION_MARKER,
};

use std::collections::{BTreeMap, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Project;

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("project {0} has no usable description")]
    EmptyDescription(String),
    #[error("unparseable response: {detail}")]
    ParseFailure { detail: String, raw: String },
    #[error("{dimension} score {value} outside 1..=5")]
    ScoreOutOfRange { dimension: String, value: u32 },
    #[error("endpoint {model}: {detail}")]
    Endpoint { model: String, detail: String },
    #[error("request budget exhausted")]
    BudgetExceeded,
    #[error("embedding produced a zero vector")]
    ZeroVector,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("configuration: {0}")]
    Config(String),
}

/// One model's verdict on one project; the raw response is kept for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Judgment {
    pub project_id: String,
    pub model_id: String,
    pub novelty: u8,
    pub usefulness: u8,
    pub feedback: String,
    pub raw_response: String,
}

/// Why a (project, model) cell has no judgment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeFailure {
    pub project_id: String,
    pub model_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JudgmentSet {
    pub judgments: Vec<Judgment>,
    pub failures: Vec<JudgeFailure>,
}

#[derive(Debug, Clone)]
pub struct JudgeOptions {
    pub char_budget: usize,
    /// Transport attempts per request.
    pub attempts: usize,
    pub backoff_ms: u64,
    /// Cap on total endpoint calls; exhaustion leaves the rest unjudged.
    pub max_requests: Option<usize>,
}

impl Default for JudgeOptions {
    fn default() -> Self {
        JudgeOptions {
            char_budget: DEFAULT_CHAR_BUDGET,
            attempts: 3,
            backoff_ms: 500,
            max_requests: None,
        }
    }
}

/// Judges every (project, model) cell once. Each endpoint serves at most
/// its `max_in_flight` concurrent requests; results merge in
/// (project, model) order, so replay runs are bit-stable at any
/// concurrency level. Parse failures trigger one format reprompt.
pub fn judge_corpus(
    projects: &[&Project],
    endpoints: &[&dyn ChatEndpoint],
    options: &JudgeOptions,
) -> JudgmentSet {
    let mut unique: BTreeMap<&str, &Project> = BTreeMap::new();
    for p in projects {
        unique.entry(p.id.as_str()).or_insert(p);
    }
    let ordered: Vec<&Project> = unique.into_values().collect();

    let spent = AtomicUsize::new(0);
    let judgments = Mutex::new(Vec::new());
    let failures = Mutex::new(Vec::new());

    std::thread::scope(|scope| {
        for endpoint in endpoints {
            let ordered = &ordered;
            let spent = &spent;
            let judgments = &judgments;
            let failures = &failures;
            scope.spawn(move || {
                let queue: Mutex<VecDeque<&Project>> =
                    Mutex::new(ordered.iter().copied().collect());
                let workers = endpoint.max_in_flight().max(1).min(ordered.len().max(1));
                std::thread::scope(|inner| {
                    for _ in 0..workers {
                        let queue = &queue;
                        inner.spawn(move || loop {
                            let project = match queue.lock().unwrap().pop_front() {
                                Some(p) => p,
                                None => break,
                            };
                            match judge_one(project, *endpoint, options, spent) {
                                Ok(judgment) => judgments.lock().unwrap().push(judgment),
                                Err(err) => failures.lock().unwrap().push(JudgeFailure {
                                    project_id: project.id.clone(),
                                    model_id: endpoint.model_id().to_string(),
                                    reason: err.to_string(),
                                }),
                            }
                        });
                    }
                });
            });
        }
    });

    let mut set = JudgmentSet {
        judgments: judgments.into_inner().unwrap(),
        failures: failures.into_inner().unwrap(),
    };
    set.judgments
        .sort_by(|a, b| (&a.project_id, &a.model_id).cmp(&(&b.project_id, &b.model_id)));
    set.failures
        .sort_by(|a, b| (&a.project_id, &a.model_id).cmp(&(&b.project_id, &b.model_id)));
    set
}

fn judge_one(
    project: &Project,
    endpoint: &dyn ChatEndpoint,
    options: &JudgeOptions,
    spent: &AtomicUsize,
) -> Result<Judgment, JudgeError> {
    let prompt = build_prompt(project, options.char_budget)?;
    let raw = complete_with_retry(endpoint, project, &prompt.system_text, &prompt.user_text, options, spent)?;
    match parse_judgment(&raw) {
        Ok((novelty, usefulness, feedback)) => Ok(Judgment {
            project_id: project.id.clone(),
            model_id: endpoint.model_id().to_string(),
            novelty,
            usefulness,
            feedback,
            raw_response: raw,
        }),
        Err(first_err) => {
            // One bounded reprompt asking for the exact format.
            let reprompt = format!("{}{}", prompt.user_text, REPROMPT_SUFFIX);
            let raw2 =
                complete_with_retry(endpoint, project, &prompt.system_text, &reprompt, options, spent)?;
            match parse_judgment(&raw2) {
                Ok((novelty, usefulness, feedback)) => Ok(Judgment {
                    project_id: project.id.clone(),
                    model_id: endpoint.model_id().to_string(),
                    novelty,
                    usefulness,
                    feedback,
                    raw_response: raw2,
                }),
                Err(_) => Err(first_err),
            }
        }
    }
}

fn complete_with_retry(
    endpoint: &dyn ChatEndpoint,
    project: &Project,
    system: &str,
    user: &str,
    options: &JudgeOptions,
    spent: &AtomicUsize,
) -> Result<String, JudgeError> {
    let request = JudgeRequest {
        project_id: &project.id,
        system,
        user,
    };
    let mut last = None;
    for attempt in 0..options.attempts.max(1) {
        if let Some(max) = options.max_requests {
            if spent.fetch_add(1, Ordering::SeqCst) >= max {
                return Err(JudgeError::BudgetExceeded);
            }
        }
        match endpoint.complete(&request) {
            Ok(raw) => return Ok(raw),
            Err(err) => {
                last = Some(err);
                if attempt + 1 < options.attempts && options.backoff_ms > 0 {
                    std::thread::sleep(std::time::Duration::from_millis(
                        options.backoff_ms << attempt,
                    ));
                }
            }
        }
    }
    Err(last.unwrap_or(JudgeError::BudgetExceeded))
}

/// Per-model histograms over the 1..=5 scale for both dimensions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreDistribution {
    pub models: BTreeMap<String, ModelScoreHistogram>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelScoreHistogram {
    pub judged: u64,
    pub novelty_counts: [u64; 5],
    pub usefulness_counts: [u64; 5],
    pub novelty_proportions: [f64; 5],
    pub usefulness_proportions: [f64; 5],
}

pub fn score_distribution(set: &JudgmentSet) -> ScoreDistribution {
    let mut models: BTreeMap<String, ModelScoreHistogram> = BTreeMap::new();
    for j in &set.judgments {
        let entry = models.entry(j.model_id.clone()).or_default();
        entry.judged += 1;
        entry.novelty_counts[(j.novelty - 1) as usize] += 1;
        entry.usefulness_counts[(j.usefulness - 1) as usize] += 1;
    }
    for histogram in models.values_mut() {
        let total = histogram.judged as f64;
        for i in 0..5 {
            histogram.novelty_proportions[i] = histogram.novelty_counts[i] as f64 / total;
            histogram.usefulness_proportions[i] = histogram.usefulness_counts[i] as f64 / total;
        }
    }
    ScoreDistribution { models }
}
