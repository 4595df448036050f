use std::time::Duration;

use serde_json::Value;
use thiserror::Error;

use super::ClientError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("connection failed: {0}")]
    Connect(String),
    #[error("{0}")]
    Other(String),
}

/// Posts a JSON body and returns the raw response.
pub trait HttpTransport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        bearer: Option<&str>,
        body: &Value,
        timeout: Duration,
    ) -> Result<HttpResponse, TransportError>;
}

impl<T: HttpTransport + ?Sized> HttpTransport for &T {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &Value, timeout: Duration) -> Result<HttpResponse, TransportError> {
        (**self).post_json(url, bearer, body, timeout)
    }
}

impl<T: HttpTransport + ?Sized> HttpTransport for std::sync::Arc<T> {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &Value, timeout: Duration) -> Result<HttpResponse, TransportError> {
        (**self).post_json(url, bearer, body, timeout)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport for ReqwestTransport {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &Value, timeout: Duration) -> Result<HttpResponse, TransportError> {
        let mut req = self.client.post(url).timeout(timeout).json(body);
        if let Some(token) = bearer {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                TransportError::Timeout
            } else if e.is_connect() {
                TransportError::Connect(e.to_string())
            } else {
                TransportError::Other(e.to_string())
            }
        })?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| TransportError::Other(e.to_string()))?;
        Ok(HttpResponse { status, body })
    }
}

/// Exponential backoff for transient failures (transport errors, 429, 5xx).
#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    /// Ceiling on the total time spent sleeping between attempts.
    pub max_total_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
            max_total_delay: Duration::from_secs(10),
        }
    }
}

impl RetryPolicy {
    pub fn no_delay() -> Self {
        RetryPolicy { base_delay: Duration::ZERO, max_total_delay: Duration::ZERO, ..Default::default() }
    }

    /// Sleep before attempt `attempt` (1-based, so the first retry is attempt 2),
    /// given how long has already been slept.
    pub fn delay_before(&self, attempt: u32, slept: Duration) -> Duration {
        let exp = self.base_delay.saturating_mul(1 << attempt.saturating_sub(2).min(16));
        exp.min(self.max_total_delay.saturating_sub(slept))
    }
}

fn is_transient(status: u16) -> bool {
    status == 429 || status >= 500
}

/// Servers sometimes echo request headers back in error bodies.
fn scrub(text: &str, bearer: Option<&str>) -> String {
    match bearer {
        Some(key) if !key.is_empty() => text.replace(key, "<redacted>"),
        _ => text.to_string(),
    }
}

/// Posts with retries; non-transient HTTP errors fail immediately.
pub fn post_with_retry(
    transport: &dyn HttpTransport,
    policy: &RetryPolicy,
    url: &str,
    bearer: Option<&str>,
    body: &Value,
    timeout: Duration,
) -> Result<String, ClientError> {
    let attempts = policy.max_attempts.max(1);
    let mut slept = Duration::ZERO;
    let mut last = ClientError::backend(None, "no attempt made");
    for attempt in 1..=attempts {
        if attempt > 1 {
            let d = policy.delay_before(attempt, slept);
            if !d.is_zero() {
                std::thread::sleep(d);
                slept += d;
            }
        }
        match transport.post_json(url, bearer, body, timeout) {
            Ok(resp) if (200..300).contains(&resp.status) => return Ok(resp.body),
            Ok(resp) if is_transient(resp.status) => last = ClientError::backend(Some(resp.status), &scrub(&resp.body, bearer)),
            Ok(resp) => return Err(ClientError::backend(Some(resp.status), &scrub(&resp.body, bearer))),
            Err(e) => last = ClientError::backend(None, &scrub(&e.to_string(), bearer)),
        }
    }
    Err(last)
}
