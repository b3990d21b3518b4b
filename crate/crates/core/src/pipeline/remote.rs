use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::provider::{Provider, ProviderError, ProviderKind, ProviderRequest};

pub const DEFAULT_API_KEY_ENV: &str = "CUEPATH_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    /// Base URL; requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the bearer token. Unset means no auth header.
    pub api_key_env: String,
    pub timeout: Duration,
    pub temperature: f64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            base_url: "http://127.0.0.1:8000/v1".into(),
            model: "gpt-4o-mini".into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            timeout: Duration::from_secs(60),
            temperature: 0.8,
        }
    }
}

/// Chat-completion client: one user message, reply read from
/// `choices[0].message.content`.
pub struct RemoteProvider {
    config: RemoteConfig,
    agent: ureq::Agent,
}

impl RemoteProvider {
    pub fn new(config: RemoteConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteProvider { config, agent }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn endpoint(&self) -> String {
        format!(
            "{}/chat/completions",
            self.config.base_url.trim_end_matches('/')
        )
    }

    pub(crate) fn request_body(&self, request: &ProviderRequest) -> Value {
        json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
        })
    }
}

pub(crate) fn completion_text(reply: &Value) -> Result<String, ProviderError> {
    reply
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| {
            ProviderError::Protocol("reply has no choices[0].message.content string".into())
        })
}

impl Provider for RemoteProvider {
    fn kind(&self) -> ProviderKind {
        ProviderKind::Remote
    }

    fn submit(&self, request: &ProviderRequest) -> Result<String, ProviderError> {
        let mut call = self
            .agent
            .post(self.endpoint())
            .header("Content-Type", "application/json");
        if let Ok(key) = std::env::var(&self.config.api_key_env) {
            if !key.is_empty() {
                call = call.header("Authorization", format!("Bearer {key}"));
            }
        }
        let mut response = call
            .send_json(self.request_body(request))
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => ProviderError::Timeout(self.config.timeout),
                other => ProviderError::Transport(other.to_string()),
            })?;
        let status = response.status();
        let text = response.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => ProviderError::Timeout(self.config.timeout),
            other => ProviderError::Transport(other.to_string()),
        })?;
        if !status.is_success() {
            let excerpt: String = text.chars().take(200).collect();
            return Err(ProviderError::Transport(format!(
                "HTTP {}: {excerpt}",
                status.as_u16()
            )));
        }
        let reply: Value = serde_json::from_str(&text)
            .map_err(|e| ProviderError::Protocol(format!("reply is not JSON: {e}")))?;
        completion_text(&reply)
    }
}
