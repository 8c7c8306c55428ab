//! Chat-completion backend over HTTP, for OpenAI-compatible endpoints.

use std::env;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;
use xlate_core::gateway::{Backend, BackendError};
use xlate_core::prompt::{GenerationParams, PromptInstance};

pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1";
pub const ENV_ENDPOINT: &str = "XLATE_LLM_ENDPOINT";
pub const ENV_API_KEY: &str = "XLATE_LLM_API_KEY";
pub const ENV_MODEL: &str = "XLATE_LLM_MODEL";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpConfig {
    pub endpoint: String,
    pub api_key: String,
    /// Overrides the generation params' model name when set.
    pub model: Option<String>,
    pub timeout: Duration,
    /// Pause before reporting a transient failure, doubled per consecutive
    /// failure up to 32 times; the gateway retries right after.
    pub backoff: Duration,
}

impl HttpConfig {
    /// Reads endpoint, key and model from the environment. The key falls
    /// back to `OPENAI_API_KEY`. `None` when no key is set.
    pub fn from_env() -> Option<Self> {
        let key = env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty()).or_else(|| {
            env::var("OPENAI_API_KEY").ok().filter(|k| !k.is_empty())
        })?;
        Some(HttpConfig {
            endpoint: env::var(ENV_ENDPOINT).ok().filter(|e| !e.is_empty()).unwrap_or_else(|| DEFAULT_ENDPOINT.into()),
            api_key: key,
            model: env::var(ENV_MODEL).ok().filter(|m| !m.is_empty()),
            timeout: Duration::from_secs(300),
            backoff: Duration::from_secs(2),
        })
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    agent: ureq::Agent,
    failures: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpBackend { config, agent, failures: 0 }
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'))
    }
}

pub fn request_body(request: &PromptInstance, params: &GenerationParams, model: Option<&str>) -> serde_json::Value {
    let mut messages = Vec::new();
    if !request.context.is_empty() {
        messages.push(json!({"role": "system", "content": request.context}));
    }
    messages.push(json!({"role": "user", "content": request.prompt}));
    json!({
        "model": model.unwrap_or(&params.model_name),
        "messages": messages,
        "temperature": params.temperature,
        "max_tokens": params.max_tokens,
    })
}

impl Backend for HttpBackend {
    fn complete(&mut self, request: &PromptInstance, params: &GenerationParams) -> Result<String, BackendError> {
        let result = self.send(request, params);
        match &result {
            Err(BackendError::Unavailable { transient: true, .. }) => {
                std::thread::sleep(self.config.backoff * (1u32 << self.failures.min(5)));
                self.failures += 1;
            }
            _ => self.failures = 0,
        }
        result
    }
}

impl HttpBackend {
    fn send(&mut self, request: &PromptInstance, params: &GenerationParams) -> Result<String, BackendError> {
        let body = request_body(request, params, self.config.model.as_deref());
        let unavailable = |message: String, transient: bool| BackendError::Unavailable { message, transient };
        let mut resp = self
            .agent
            .post(&self.url())
            .header("Authorization", &format!("Bearer {}", self.config.api_key))
            .header("Content-Type", "application/json")
            .send_json(&body)
            .map_err(|e| unavailable(format!("request failed: {e}"), true))?;
        let status = resp.status().as_u16();
        if status != 200 {
            let text = resp.body_mut().read_to_string().unwrap_or_default();
            let snippet: String = text.chars().take(300).collect();
            return Err(unavailable(format!("HTTP {status}: {snippet}"), status == 429 || status >= 500));
        }
        let parsed: ChatResponse =
            resp.body_mut().read_json().map_err(|e| unavailable(format!("malformed response: {e}"), false))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| unavailable("response has no message content".into(), false))
    }
}
