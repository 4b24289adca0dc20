//! OpenAI-compatible chat-completions client (blocking).

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::client::{ChatRequest, ChatResponse, LlmClient, LlmError, Usage};

pub const DEFAULT_API_KEY_ENV: &str = "OPENAI_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    /// Base URL up to and including the version segment, e.g. `https://api.openai.com/v1`.
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_attempts: u32,
    pub backoff_ms: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o-mini".into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            timeout_secs: 120,
            max_attempts: 3,
            backoff_ms: 500,
        }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: [WireMessage<'a>; 2],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireReply,
}

#[derive(Deserialize)]
struct WireReply {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

pub struct HttpClient {
    config: EndpointConfig,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
}

enum Attempt {
    Done(ChatResponse),
    Retry(String),
    Fatal(LlmError),
}

impl HttpClient {
    /// Reads the API key from `config.api_key_env`; a missing key sends no
    /// `Authorization` header (for local endpoints).
    pub fn new(config: EndpointConfig) -> Result<Self, LlmError> {
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        Self::with_key(config, api_key)
    }

    pub fn with_key(config: EndpointConfig, api_key: Option<String>) -> Result<Self, LlmError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::Unavailable(format!("building http client: {e}")))?;
        Ok(Self { config, api_key, http })
    }

    fn url(&self) -> String {
        let base = self.config.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }

    fn attempt(&self, body: &WireRequest) -> Attempt {
        let mut req = self.http.post(self.url()).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(format!("transport: {e}")),
        };
        let status = resp.status();
        let text = resp.text().unwrap_or_default();
        if status.as_u16() == 429 || status.is_server_error() {
            return Attempt::Retry(format!("HTTP {status}: {}", first_line(&text)));
        }
        if !status.is_success() {
            return Attempt::Fatal(LlmError::Refused { status: status.as_u16(), message: first_line(&text) });
        }
        match serde_json::from_str::<WireResponse>(&text) {
            Ok(wire) => {
                let content = wire.choices.into_iter().next().and_then(|c| c.message.content);
                match content {
                    Some(text) => Attempt::Done(ChatResponse {
                        text,
                        usage: wire.usage.map(|u| Usage {
                            prompt_tokens: u.prompt_tokens,
                            completion_tokens: u.completion_tokens,
                        }),
                    }),
                    None => Attempt::Retry("response has no message content".into()),
                }
            }
            Err(e) => Attempt::Retry(format!("malformed response body: {e}")),
        }
    }
}

fn first_line(s: &str) -> String {
    s.lines().next().unwrap_or("").chars().take(300).collect()
}

impl LlmClient for HttpClient {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let body = WireRequest {
            model: &self.config.model,
            messages: [
                WireMessage { role: "system", content: &request.system },
                WireMessage { role: "user", content: &request.user },
            ],
            temperature: request.temperature,
            max_tokens: request.max_tokens,
        };
        let attempts = self.config.max_attempts.max(1);
        let mut last = String::new();
        for n in 0..attempts {
            if n > 0 {
                std::thread::sleep(Duration::from_millis(self.config.backoff_ms << (n - 1)));
            }
            match self.attempt(&body) {
                Attempt::Done(resp) => {
                    if let Some(u) = resp.usage {
                        log::debug!("llm usage: prompt={} completion={}", u.prompt_tokens, u.completion_tokens);
                    }
                    return Ok(resp);
                }
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(msg) => {
                    log::warn!("llm attempt {}/{attempts} failed: {msg}", n + 1);
                    last = msg;
                }
            }
        }
        Err(LlmError::Unavailable(format!("after {attempts} attempts: {last}")))
    }
}
