//! Request transports for the language planner.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::{json, Value};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ChatRequest {
    pub model: String,
    pub text: String,
    /// Base64-encoded PNG attached to the user message.
    pub image_png_base64: Option<String>,
}

impl ChatRequest {
    /// Chat-completions request body with one user message holding the text
    /// and, if present, the image.
    pub fn body(&self) -> Value {
        let mut content = vec![json!({ "type": "text", "text": self.text })];
        if let Some(img) = &self.image_png_base64 {
            content.push(json!({
                "type": "image_url",
                "image_url": { "url": format!("data:image/png;base64,{img}") }
            }));
        }
        json!({
            "model": self.model,
            "temperature": 0,
            "messages": [{ "role": "user", "content": content }]
        })
    }
}

pub trait Transport: Send {
    /// Returns the assistant message text.
    fn complete(&mut self, req: &ChatRequest) -> Result<String>;
}

/// Extracts `choices[0].message.content` from a chat-completions response.
pub fn response_text(body: &Value) -> Result<String> {
    body.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| Error::Api("response has no choices[0].message.content".into()))
}

/// Blocking HTTP client for a chat-completions endpoint.
pub struct HttpTransport {
    endpoint: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent =
            ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        Self { endpoint: endpoint.into(), api_key, agent }
    }
}

impl Transport for HttpTransport {
    fn complete(&mut self, req: &ChatRequest) -> Result<String> {
        let mut call = self.agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp =
            call.send(req.body().to_string().as_bytes()).map_err(|e| Error::Api(format!("request failed: {e}")))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| Error::Api(format!("reading response: {e}")))?;
        if !(200..300).contains(&status) {
            let snippet: String = text.chars().take(200).collect();
            return Err(Error::Api(format!("HTTP {status}: {snippet}")));
        }
        let body: Value = serde_json::from_str(&text).map_err(|e| Error::Api(format!("invalid JSON response: {e}")))?;
        response_text(&body)
    }
}

/// Serves canned responses in order, cycling when exhausted.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayTransport {
    responses: Vec<String>,
    next: usize,
}

impl ReplayTransport {
    pub fn new(responses: Vec<String>) -> Result<Self> {
        if responses.is_empty() {
            return Err(Error::Config("replay needs at least one response".into()));
        }
        Ok(Self { responses, next: 0 })
    }

    /// Loads every `*.txt` file of `dir` in file-name order.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut files: Vec<PathBuf> =
            std::fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
        files.retain(|p| p.extension().is_some_and(|e| e == "txt"));
        files.sort();
        let responses = files.iter().map(std::fs::read_to_string).collect::<std::io::Result<Vec<_>>>()?;
        Self::new(responses)
    }
}

impl Transport for ReplayTransport {
    fn complete(&mut self, _req: &ChatRequest) -> Result<String> {
        let r = self.responses[self.next % self.responses.len()].clone();
        self.next += 1;
        Ok(r)
    }
}
