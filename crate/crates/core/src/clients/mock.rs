//! Scripted in-process backends for tests, examples and benches.

use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;
use std::time::Duration;

use serde_json::Value;

use super::chat::{ChatBackend, ChatRequest};
use super::image::{GeneratedImage, ImageBackend, Txt2ImgRequest};
use super::transport::{HttpResponse, HttpTransport, TransportError};
use super::ClientError;
use crate::llm_io::{StageId, TemplateRegistry};

/// A valid 1x1 RGBA PNG.
pub const ONE_PIXEL_PNG: &[u8] = &[
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44, 0x52, 0x00, 0x00,
    0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x06, 0x00, 0x00, 0x00, 0x1f, 0x15, 0xc4, 0x89, 0x00, 0x00, 0x00,
    0x0b, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0xf8, 0x0f, 0x04, 0x00, 0x09, 0xfb, 0x03, 0xfd, 0xfb, 0x5e,
    0x6b, 0x2b, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82,
];

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportCall {
    pub url: String,
    pub bearer: Option<String>,
    pub body: Value,
}

/// Replays a fixed list of HTTP outcomes, then optionally repeats one response.
#[derive(Debug, Default)]
pub struct ScriptedTransport {
    script: Mutex<VecDeque<Result<HttpResponse, TransportError>>>,
    fallback: Option<HttpResponse>,
    calls: Mutex<Vec<TransportCall>>,
}

impl ScriptedTransport {
    pub fn new(script: Vec<Result<HttpResponse, TransportError>>) -> Self {
        ScriptedTransport { script: Mutex::new(script.into()), ..Default::default() }
    }

    pub fn repeating(resp: HttpResponse) -> Self {
        ScriptedTransport { fallback: Some(resp), ..Default::default() }
    }

    pub fn calls(&self) -> Vec<TransportCall> {
        lock(&self.calls).clone()
    }
}

impl HttpTransport for ScriptedTransport {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &Value, _: Duration) -> Result<HttpResponse, TransportError> {
        lock(&self.calls).push(TransportCall {
            url: url.to_string(),
            bearer: bearer.map(str::to_string),
            body: body.clone(),
        });
        match lock(&self.script).pop_front() {
            Some(outcome) => outcome,
            None => self.fallback.clone().ok_or_else(|| TransportError::Other("script exhausted".into())),
        }
    }
}

type ChatFn = dyn Fn(&ChatRequest) -> Result<String, ClientError> + Send + Sync;

enum Script {
    Sequence(VecDeque<String>),
    Staged(HashMap<StageId, VecDeque<String>>),
    Func(Box<ChatFn>),
}

/// A chat backend with canned replies; every request is recorded.
pub struct ScriptedChat {
    script: Mutex<Script>,
    calls: Mutex<Vec<ChatRequest>>,
}

/// The stage a request was rendered from, if it came from a builtin template.
pub fn stage_of(req: &ChatRequest) -> Option<StageId> {
    TemplateRegistry::builtin().identify(&req.system)
}

impl ScriptedChat {
    fn with(script: Script) -> Self {
        ScriptedChat { script: Mutex::new(script), calls: Mutex::new(Vec::new()) }
    }

    /// Replies in order regardless of stage.
    pub fn sequence<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::with(Script::Sequence(replies.into_iter().map(Into::into).collect()))
    }

    /// One queue per stage, picked by recognising the system message.
    pub fn staged<I, S>(queues: I) -> Self
    where
        I: IntoIterator<Item = (StageId, Vec<S>)>,
        S: Into<String>,
    {
        let map = queues
            .into_iter()
            .map(|(stage, replies)| (stage, replies.into_iter().map(Into::into).collect()))
            .collect();
        Self::with(Script::Staged(map))
    }

    pub fn from_fn(f: impl Fn(&ChatRequest) -> Result<String, ClientError> + Send + Sync + 'static) -> Self {
        Self::with(Script::Func(Box::new(f)))
    }

    pub fn calls(&self) -> Vec<ChatRequest> {
        lock(&self.calls).clone()
    }

    pub fn calls_for(&self, stage: StageId) -> Vec<ChatRequest> {
        self.calls().into_iter().filter(|c| stage_of(c) == Some(stage)).collect()
    }
}

impl ChatBackend for ScriptedChat {
    fn chat_complete(&self, req: &ChatRequest) -> Result<String, ClientError> {
        lock(&self.calls).push(req.clone());
        let exhausted = |what: &str| ClientError::Backend { status: None, excerpt: format!("script exhausted for {what}") };
        match &mut *lock(&self.script) {
            Script::Sequence(q) => q.pop_front().ok_or_else(|| exhausted("sequence")),
            Script::Staged(map) => {
                let stage = stage_of(req).ok_or_else(|| exhausted("unrecognised stage"))?;
                map.get_mut(&stage)
                    .and_then(VecDeque::pop_front)
                    .ok_or_else(|| exhausted(stage.as_str()))
            }
            Script::Func(f) => f(req),
        }
    }
}

/// Image backend that always returns [`ONE_PIXEL_PNG`].
#[derive(Debug, Default)]
pub struct MockImages {
    requests: Mutex<Vec<Txt2ImgRequest>>,
    /// Zero-based call index that fails with an HTTP 500.
    pub fail_on: Option<usize>,
}

impl MockImages {
    pub fn failing_on(call: usize) -> Self {
        MockImages { fail_on: Some(call), ..Default::default() }
    }

    pub fn requests(&self) -> Vec<Txt2ImgRequest> {
        lock(&self.requests).clone()
    }
}

impl ImageBackend for MockImages {
    fn txt2img(&self, req: &Txt2ImgRequest) -> Result<GeneratedImage, ClientError> {
        let mut requests = lock(&self.requests);
        let index = requests.len();
        requests.push(req.clone());
        if self.fail_on == Some(index) {
            return Err(ClientError::Backend { status: Some(500), excerpt: "mock failure".into() });
        }
        Ok(GeneratedImage { png: ONE_PIXEL_PNG.to_vec(), seed: Some(req.seed.unwrap_or(42)) })
    }
}
