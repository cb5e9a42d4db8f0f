//! OpenAI-compatible chat-completions backend.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::backend::{Backend, BackendError, ChatRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveConfig {
    /// Base URL, e.g. `https://api.openai.com/v1`.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_parallelism")]
    pub max_parallelism: usize,
}

fn default_retries() -> u32 {
    2
}

fn default_timeout() -> u64 {
    120
}

fn default_parallelism() -> usize {
    4
}

pub struct LiveBackend {
    config: LiveConfig,
    label: String,
    api_key: String,
    agent: ureq::Agent,
}

impl std::fmt::Debug for LiveBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiveBackend").field("label", &self.label).field("model", &self.config.model).finish()
    }
}

impl LiveBackend {
    /// Reads the key from `config.api_key_env`; the key is kept in memory only.
    pub fn new(label: impl Into<String>, config: LiveConfig) -> Result<LiveBackend, BackendError> {
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| BackendError(format!("environment variable {} is not set", config.api_key_env)))?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(LiveBackend { label: label.into(), config, api_key, agent })
    }

    fn attempt(&self, body: &Value) -> Result<String, (bool, String)> {
        let url = format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'));
        let mut resp = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body)
            .map_err(|e| (true, e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| (true, e.to_string()))?;
        if status != 200 {
            let retry = status == 429 || status >= 500;
            return Err((retry, format!("HTTP {status}: {}", truncate(&text, 300))));
        }
        parse_completion(&text).map_err(|e| (false, e))
    }
}

fn truncate(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

/// Extracts `choices[0].message.content` from a completion response body.
pub fn parse_completion(body: &str) -> Result<String, String> {
    let v: Value = serde_json::from_str(body).map_err(|e| format!("malformed response: {e}"))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| "response has no message content".to_string())
}

impl Backend for LiveBackend {
    fn label(&self) -> &str {
        &self.label
    }

    fn deterministic(&self) -> bool {
        false
    }

    fn max_parallelism(&self) -> usize {
        self.config.max_parallelism.max(1)
    }

    fn send(&self, request: &ChatRequest<'_>) -> Result<String, BackendError> {
        let messages: Vec<Value> =
            request.messages.iter().map(|m| json!({"role": m.role.name(), "content": m.content})).collect();
        let body = json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": messages,
        });
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err((retry, msg)) => {
                    last = msg;
                    if !retry {
                        break;
                    }
                    std::thread::sleep(Duration::from_millis(500 << attempt.min(6)));
                }
            }
        }
        Err(BackendError(last))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completion_content() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"hi"}}]}"#;
        assert_eq!(parse_completion(body).unwrap(), "hi");
        assert!(parse_completion(r#"{"choices":[]}"#).is_err());
        assert!(parse_completion("nope").is_err());
    }

    #[test]
    fn missing_key_is_an_error() {
        let cfg = LiveConfig {
            endpoint: "http://localhost:1".into(),
            model: "m".into(),
            api_key_env: "RADBENCH_TEST_KEY_THAT_IS_NOT_SET".into(),
            temperature: 0.0,
            retries: 0,
            timeout_secs: 1,
            max_parallelism: 1,
        };
        assert!(LiveBackend::new("x", cfg).is_err());
    }
}
