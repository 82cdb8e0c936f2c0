use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{build_prompt, heuristic_tokens, PromptTemplate, Summarizer, SummarizerError, SummaryInput, SummaryOutput};
use crate::cost::CHARS_PER_TOKEN;
use crate::trajectory::{Segment, TokenCount};

/// Environment variable holding the bearer credential for remote summarization.
pub const API_KEY_ENV: &str = "CTXCOST_API_KEY";

const MAX_ATTEMPTS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_output")]
    pub max_output_tokens: TokenCount,
    /// Initial backoff; doubled after each failed attempt.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: u64,
}

fn default_max_output() -> TokenCount {
    TokenCount(super::DEFAULT_SUMMARY_MAX_TOKENS)
}

fn default_backoff_ms() -> u64 {
    500
}

fn default_timeout_s() -> u64 {
    120
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        RemoteConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            temperature: 0.0,
            max_output_tokens: default_max_output(),
            backoff_ms: default_backoff_ms(),
            timeout_s: default_timeout_s(),
        }
    }
}

/// Chat-completion client. Retries transport failures and non-2xx
/// statuses with exponential backoff, up to three attempts.
pub struct RemoteSummarizer {
    cfg: RemoteConfig,
    template: PromptTemplate,
    instruction_tokens: TokenCount,
    agent: ureq::Agent,
    api_key: Option<String>,
}

impl RemoteSummarizer {
    pub fn new(cfg: RemoteConfig, template: PromptTemplate) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_secs(cfg.timeout_s)).build();
        let instruction_tokens = heuristic_tokens(&template.system_text);
        let api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        RemoteSummarizer { cfg, template, instruction_tokens, agent, api_key }
    }

    fn request_body(&self, input: &SummaryInput) -> Result<Value, SummarizerError> {
        let msgs = build_prompt(&self.template, input)?;
        Ok(json!({
            "model": self.cfg.model,
            "messages": [
                {"role": "system", "content": msgs.system},
                {"role": "user", "content": msgs.user},
            ],
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_output_tokens.0,
        }))
    }

    fn post_once(&self, body: &Value) -> Result<Value, String> {
        let mut req = self.agent.post(&self.cfg.endpoint).set("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        match req.send_json(body.clone()) {
            Ok(resp) => resp.into_json::<Value>().map_err(|e| format!("reading body: {e}")),
            Err(ureq::Error::Status(code, resp)) => {
                let text = resp.into_string().unwrap_or_default();
                Err(format!("status {code}: {}", text.chars().take(200).collect::<String>()))
            }
            Err(e) => Err(e.to_string()),
        }
    }
}

impl Summarizer for RemoteSummarizer {
    fn summarize(&self, input: &SummaryInput) -> Result<SummaryOutput, SummarizerError> {
        let body = self.request_body(input)?;
        let mut delay = Duration::from_millis(self.cfg.backoff_ms);
        let mut last_err = String::new();
        for attempt in 1..=MAX_ATTEMPTS {
            match self.post_once(&body) {
                Ok(resp) => return parse_response(&resp, self.cfg.max_output_tokens),
                Err(e) => {
                    last_err = e;
                    if attempt < MAX_ATTEMPTS {
                        thread::sleep(delay);
                        delay *= 2;
                    }
                }
            }
        }
        Err(SummarizerError::Transport { attempts: MAX_ATTEMPTS, message: last_err })
    }

    fn instruction_tokens(&self) -> TokenCount {
        self.instruction_tokens
    }

    fn instruction_text(&self) -> &str {
        &self.template.system_text
    }
}

fn parse_response(resp: &Value, max_output: TokenCount) -> Result<SummaryOutput, SummarizerError> {
    let text = resp
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| SummarizerError::Response("missing choices[0].message.content".into()))?;
    let reported = resp.pointer("/usage/completion_tokens").and_then(Value::as_u64);
    let tokens = reported.map(TokenCount).unwrap_or_else(|| heuristic_tokens(text));
    if tokens <= max_output {
        return Ok(SummaryOutput::new(Segment { text: text.to_string(), tokens }));
    }
    let cut: String = text.chars().take(max_output.0 as usize * CHARS_PER_TOKEN).collect();
    Ok(SummaryOutput { segment: Segment { text: cut, tokens: max_output }, truncated: true })
}
