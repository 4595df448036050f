use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::transport::{post_with_retry, HttpTransport, ReqwestTransport, RetryPolicy};
use super::ClientError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub system: String,
    pub user: String,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<i64>,
}

impl ChatRequest {
    pub fn validate(&self) -> Result<(), ClientError> {
        if self.system.trim().is_empty() || self.user.trim().is_empty() {
            return Err(ClientError::InvalidRequest("system and user messages must be nonempty".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(ClientError::InvalidRequest("temperature must be >= 0".into()));
        }
        if self.max_tokens == Some(0) {
            return Err(ClientError::InvalidRequest("max_tokens must be positive".into()));
        }
        Ok(())
    }

    /// `/v1/chat/completions` request body.
    pub fn to_wire(&self) -> Value {
        let mut body = json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": self.system},
                {"role": "user", "content": self.user},
            ],
            "temperature": self.temperature,
        });
        if let Some(max) = self.max_tokens {
            body["max_tokens"] = json!(max);
        }
        if let Some(seed) = self.seed {
            body["seed"] = json!(seed);
        }
        body
    }
}

pub trait ChatBackend: Send + Sync {
    /// Returns the assistant message text.
    fn chat_complete(&self, req: &ChatRequest) -> Result<String, ClientError>;
}

impl<T: ChatBackend + ?Sized> ChatBackend for &T {
    fn chat_complete(&self, req: &ChatRequest) -> Result<String, ClientError> {
        (**self).chat_complete(req)
    }
}

impl<T: ChatBackend + ?Sized> ChatBackend for Box<T> {
    fn chat_complete(&self, req: &ChatRequest) -> Result<String, ClientError> {
        (**self).chat_complete(req)
    }
}

impl<T: ChatBackend + ?Sized> ChatBackend for std::sync::Arc<T> {
    fn chat_complete(&self, req: &ChatRequest) -> Result<String, ClientError> {
        (**self).chat_complete(req)
    }
}

/// Client for any OpenAI-compatible chat endpoint.
pub struct OpenAiChat<T = ReqwestTransport> {
    base_url: String,
    api_key: Option<String>,
    transport: T,
    pub retry: RetryPolicy,
    pub timeout: Duration,
}

impl<T> std::fmt::Debug for OpenAiChat<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OpenAiChat")
            .field("base_url", &self.base_url)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl OpenAiChat<ReqwestTransport> {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>) -> Self {
        Self::with_transport(base_url, api_key, ReqwestTransport::default())
    }
}

impl<T: HttpTransport> OpenAiChat<T> {
    pub fn with_transport(base_url: impl Into<String>, api_key: Option<String>, transport: T) -> Self {
        OpenAiChat {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key,
            transport,
            retry: RetryPolicy::default(),
            timeout: Duration::from_secs(120),
        }
    }

    pub fn endpoint(&self) -> String {
        format!("{}/v1/chat/completions", self.base_url)
    }
}

impl<T: HttpTransport> ChatBackend for OpenAiChat<T> {
    fn chat_complete(&self, req: &ChatRequest) -> Result<String, ClientError> {
        req.validate()?;
        let body = post_with_retry(
            &self.transport,
            &self.retry,
            &self.endpoint(),
            self.api_key.as_deref(),
            &req.to_wire(),
            self.timeout,
        )?;
        let value: Value =
            serde_json::from_str(&body).map_err(|e| ClientError::backend(Some(200), &format!("unparseable reply: {e}")))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ClientError::backend(Some(200), "reply lacks choices[0].message.content"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clients::mock::ScriptedTransport;
    use crate::clients::HttpResponse;

    fn req() -> ChatRequest {
        ChatRequest {
            model: "gpt-4-turbo".into(),
            system: "sys".into(),
            user: "usr".into(),
            temperature: 0.7,
            max_tokens: None,
            seed: Some(7),
        }
    }

    fn ok(content: &str) -> HttpResponse {
        let body = json!({"choices": [{"message": {"role": "assistant", "content": content}}]});
        HttpResponse { status: 200, body: body.to_string() }
    }

    #[test]
    fn wire_format() {
        let w = req().to_wire();
        assert_eq!(w["messages"][0]["role"], "system");
        assert_eq!(w["messages"][1]["content"], "usr");
        assert_eq!(w["seed"], 7);
        assert!(w.get("max_tokens").is_none());
    }

    #[test]
    fn completes_with_bearer() {
        let t = ScriptedTransport::new(vec![Ok(HttpResponse { status: 502, body: String::new() }), Ok(ok("hello"))]);
        let mut chat = OpenAiChat::with_transport("http://llm/", Some("sk-test".into()), &t);
        chat.retry = RetryPolicy::no_delay();
        assert_eq!(chat.chat_complete(&req()).unwrap(), "hello");
        let calls = t.calls();
        assert_eq!(calls.len(), 2);
        assert_eq!(calls[0].url, "http://llm/v1/chat/completions");
        assert_eq!(calls[0].bearer.as_deref(), Some("sk-test"));
        assert!(!format!("{chat:?}").contains("sk-test"));
    }

    #[test]
    fn rejects_bad_requests_and_replies() {
        let t = ScriptedTransport::repeating(HttpResponse { status: 200, body: "{}".into() });
        let chat = OpenAiChat::with_transport("http://llm", None, &t);
        assert!(matches!(chat.chat_complete(&ChatRequest { user: " ".into(), ..req() }), Err(ClientError::InvalidRequest(_))));
        assert!(t.calls().is_empty());
        assert!(matches!(chat.chat_complete(&req()), Err(ClientError::Backend { .. })));
    }
}
