//! Chat-completion and txt2img backends.
//!
//! Live backends speak the OpenAI-compatible `/v1/chat/completions` and the
//! Automatic1111 `/sdapi/v1/txt2img` wire formats over an [`HttpTransport`].
//! [`Fixtured`] wraps any backend with digest-keyed record/replay.

mod canonical;
mod chat;
mod fixtures;
mod image;
pub mod mock;
mod transport;

use thiserror::Error;

pub use canonical::canonical_json;
pub use chat::{ChatBackend, ChatRequest, OpenAiChat};
pub use fixtures::{FixtureFile, FixtureMode, FixtureStore, Fixtured, Offline};
pub use image::{
    decode_png_base64, Automatic1111, GeneratedImage, ImageBackend, RefinerMode, Txt2ImgRequest, DEFAULT_REFINER_CHECKPOINT,
};
pub use transport::{post_with_retry, HttpResponse, HttpTransport, ReqwestTransport, RetryPolicy, TransportError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClientError {
    #[error("backend error{}: {excerpt}", status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    Backend { status: Option<u16>, excerpt: String },
    #[error("no recorded fixture for request digest {0}")]
    FixtureMiss(String),
    #[error("image decode error: {0}")]
    ImageDecode(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("fixture store: {0}")]
    Fixture(String),
}

impl ClientError {
    pub(crate) fn backend(status: Option<u16>, body: &str) -> Self {
        const MAX: usize = 300;
        let excerpt = match body.char_indices().nth(MAX) {
            Some((cut, _)) => format!("{}…", &body[..cut]),
            None => body.to_string(),
        };
        ClientError::Backend { status, excerpt }
    }
}
