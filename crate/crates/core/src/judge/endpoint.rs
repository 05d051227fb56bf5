//! Chat-completion endpoints: a live HTTP client speaking the common
//! chat-completions JSON shape, and a filesystem replay endpoint for
//! deterministic offline runs.

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::JudgeError;

/// One completion request; `project_id` keys replay fixtures and is
/// ignored by live endpoints.
#[derive(Debug, Clone)]
pub struct JudgeRequest<'a> {
    pub project_id: &'a str,
    pub system: &'a str,
    pub user: &'a str,
}

pub trait ChatEndpoint: Send + Sync {
    fn model_id(&self) -> &str;
    fn complete(&self, request: &JudgeRequest<'_>) -> Result<String, JudgeError>;
    /// Concurrent requests this endpoint tolerates.
    fn max_in_flight(&self) -> usize {
        4
    }
}

/// Endpoint configuration as read from `models.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub name: String,
    pub base_url: String,
    pub model: String,
    pub max_tokens: u32,
    #[serde(default)]
    pub temperature: f64,
    /// Environment variable holding the bearer token, if any.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_in_flight() -> usize {
    4
}

fn default_timeout_secs() -> u64 {
    120
}

pub fn load_model_configs(path: &std::path::Path) -> Result<Vec<ModelConfig>, JudgeError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| JudgeError::Config(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    content: String,
}

/// Live endpoint POSTing to `<base_url>/chat/completions`.
pub struct HttpEndpoint {
    config: ModelConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpEndpoint {
    pub fn new(config: ModelConfig) -> Result<HttpEndpoint, JudgeError> {
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                JudgeError::Config(format!("environment variable {var} not set"))
            })?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| JudgeError::Config(e.to_string()))?;
        Ok(HttpEndpoint {
            config,
            api_key,
            client,
        })
    }
}

impl ChatEndpoint for HttpEndpoint {
    fn model_id(&self) -> &str {
        &self.config.name
    }

    fn max_in_flight(&self) -> usize {
        self.config.max_in_flight.max(1)
    }

    fn complete(&self, request: &JudgeRequest<'_>) -> Result<String, JudgeError> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = ChatRequest {
            model: &self.config.model,
            messages: vec![
                ChatMessage {
                    role: "system",
                    content: request.system,
                },
                ChatMessage {
                    role: "user",
                    content: request.user,
                },
            ],
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        };
        let mut http = self.client.post(&url).json(&body);
        if let Some(key) = &self.api_key {
            http = http.bearer_auth(key);
        }
        let response = http.send().map_err(|e| JudgeError::Endpoint {
            model: self.config.name.clone(),
            detail: e.to_string(),
        })?;
        if !response.status().is_success() {
            return Err(JudgeError::Endpoint {
                model: self.config.name.clone(),
                detail: format!("HTTP {}", response.status()),
            });
        }
        let parsed: ChatResponse = response.json().map_err(|e| JudgeError::Endpoint {
            model: self.config.name.clone(),
            detail: format!("bad response body: {e}"),
        })?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| JudgeError::Endpoint {
                model: self.config.name.clone(),
                detail: "response contained no choices".into(),
            })
    }
}

/// Replays canned responses from `<root>/<model>/<project_id>.txt`.
/// A `<project_id>.reprompt.txt` sibling, when present, answers the
/// one-shot format reprompt.
pub struct ReplayEndpoint {
    model: String,
    root: PathBuf,
}

impl ReplayEndpoint {
    pub fn new(model: impl Into<String>, root: impl Into<PathBuf>) -> ReplayEndpoint {
        ReplayEndpoint {
            model: model.into(),
            root: root.into(),
        }
    }
}

/// Suffix the reprompt appends to the user text.
pub const REPROMPT_SUFFIX: &str = "\nRespond only in the required format.";

impl ChatEndpoint for ReplayEndpoint {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn complete(&self, request: &JudgeRequest<'_>) -> Result<String, JudgeError> {
        let reprompted = request.user.ends_with(REPROMPT_SUFFIX);
        let file = if reprompted {
            format!("{}.reprompt.txt", request.project_id)
        } else {
            format!("{}.txt", request.project_id)
        };
        let path = self.root.join(&self.model).join(file);
        let fallback = self
            .root
            .join(&self.model)
            .join(format!("{}.txt", request.project_id));
        let chosen = if reprompted && !path.exists() { fallback } else { path };
        std::fs::read_to_string(&chosen).map_err(|e| JudgeError::Endpoint {
            model: self.model.clone(),
            detail: format!("{}: {e}", chosen.display()),
        })
    }
}
