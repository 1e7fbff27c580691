//! Chat-completion client over HTTP.

use std::thread::sleep;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::ChatClient;
use crate::{Error, Result};

pub const ENV_URL: &str = "REPLIMIT_LLM_URL";
pub const ENV_KEY: &str = "REPLIMIT_LLM_KEY";

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    pub url: String,
    pub key: Option<String>,
    /// Transport retries after the first attempt.
    pub max_retries: u32,
    pub request_delay: Duration,
    pub initial_backoff: Duration,
    pub timeout: Duration,
}

impl HttpConfig {
    pub fn new(url: impl Into<String>, key: Option<String>) -> Self {
        HttpConfig {
            url: url.into(),
            key,
            max_retries: 3,
            request_delay: Duration::from_millis(200),
            initial_backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(60),
        }
    }

    /// Reads the endpoint and bearer key from the environment.
    pub fn from_env() -> Result<Self> {
        let url = std::env::var(ENV_URL)
            .map_err(|_| Error::config(ENV_URL, "not set; pass --mock to run offline"))?;
        let key = std::env::var(ENV_KEY).ok().filter(|k| !k.is_empty());
        Ok(HttpConfig::new(url, key))
    }
}

pub struct HttpChatClient {
    config: HttpConfig,
    agent: ureq::Agent,
    last_request: Option<Instant>,
}

impl HttpChatClient {
    pub fn new(config: HttpConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        HttpChatClient {
            config,
            agent,
            last_request: None,
        }
    }

    fn pace(&mut self) {
        if let Some(last) = self.last_request {
            let elapsed = last.elapsed();
            if elapsed < self.config.request_delay {
                sleep(self.config.request_delay - elapsed);
            }
        }
        self.last_request = Some(Instant::now());
    }

    fn post_once(&self, body: &Value) -> std::result::Result<Value, (bool, String)> {
        let mut request = self.agent.post(&self.config.url);
        if let Some(key) = &self.config.key {
            request = request
                .header("Authorization", &format!("Bearer {key}"))
                .header("x-api-key", key);
        }
        match request.send_json(body) {
            Ok(mut response) => response
                .body_mut()
                .read_json::<Value>()
                .map_err(|e| (false, format!("unreadable reply: {e}"))),
            Err(ureq::Error::StatusCode(code)) => {
                let retry = code == 429 || code >= 500;
                Err((retry, format!("HTTP status {code}")))
            }
            Err(e) => Err((true, e.to_string())),
        }
    }
}

/// First text segment of an OpenAI-style or Anthropic-style reply.
pub fn reply_text(value: &Value) -> Option<&str> {
    value
        .pointer("/choices/0/message/content")
        .or_else(|| value.pointer("/choices/0/text"))
        .or_else(|| value.pointer("/content/0/text"))
        .or_else(|| value.get("text"))
        .and_then(Value::as_str)
}

impl ChatClient for HttpChatClient {
    fn complete(&mut self, model: &str, prompt: &str) -> Result<String> {
        let body = json!({
            "model": model,
            "max_tokens": 64,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut backoff = self.config.initial_backoff;
        let mut attempt = 0;
        loop {
            self.pace();
            match self.post_once(&body) {
                Ok(value) => {
                    return reply_text(&value)
                        .map(str::to_string)
                        .ok_or_else(|| Error::Provider("reply has no text segment".into()));
                }
                Err((retry, message)) => {
                    if !retry {
                        return Err(Error::Provider(message));
                    }
                    if attempt >= self.config.max_retries {
                        return Err(Error::Network(format!(
                            "{message} (after {} attempts)",
                            attempt + 1
                        )));
                    }
                    sleep(backoff);
                    backoff *= 2;
                    attempt += 1;
                }
            }
        }
    }
}
