//! Digest-keyed record/replay of backend calls.
//!
//! The digest is the SHA-256 of the canonical JSON of `{kind, request}`.
//! Sampling knobs (`temperature`, `seed`) are left out of the digest unless
//! the store is strict, so a fixture set recorded once replays under any
//! sampling configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::canonical::{canonical_json, sorted};
use super::chat::{ChatBackend, ChatRequest};
use super::image::{decode_png_base64, encode_base64, GeneratedImage, ImageBackend, Txt2ImgRequest};
use super::ClientError;
use crate::domain::hex_lower;
use crate::SCHEMA_VERSION;

const SAMPLING_KEYS: [&str; 2] = ["temperature", "seed"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureMode {
    /// Call the inner backend and write every reply.
    Record,
    /// Serve from disk only; a miss is an error and never reaches the network.
    Replay,
    Passthrough,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureFile {
    pub schema_version: u32,
    pub digest: String,
    pub kind: String,
    pub request: Value,
    pub reply: Value,
}

#[derive(Debug, Clone)]
pub struct FixtureStore {
    dir: PathBuf,
    mode: FixtureMode,
    strict: bool,
}

impl FixtureStore {
    pub fn new(dir: impl Into<PathBuf>, mode: FixtureMode) -> Self {
        FixtureStore { dir: dir.into(), mode, strict: false }
    }

    /// Includes sampling parameters in the digest.
    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn mode(&self) -> FixtureMode {
        self.mode
    }

    fn keyed_request(&self, request: &Value) -> Value {
        let mut keyed = request.clone();
        if !self.strict {
            if let Value::Object(map) = &mut keyed {
                for k in SAMPLING_KEYS {
                    map.remove(k);
                }
            }
        }
        keyed
    }

    pub fn digest(&self, kind: &str, request: &Value) -> String {
        let canonical = canonical_json(&json!({ "kind": kind, "request": self.keyed_request(request) }));
        hex_lower(&Sha256::digest(canonical.as_bytes()))
    }

    pub fn path_for(&self, digest: &str) -> PathBuf {
        self.dir.join(format!("{digest}.json"))
    }

    pub fn load(&self, kind: &str, request: &Value) -> Result<FixtureFile, ClientError> {
        let digest = self.digest(kind, request);
        let path = self.path_for(&digest);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(ClientError::FixtureMiss(digest)),
            Err(e) => return Err(ClientError::Fixture(format!("{}: {e}", path.display()))),
        };
        let file: FixtureFile = serde_json::from_str(&text)
            .map_err(|e| ClientError::Fixture(format!("{}: {e}", path.display())))?;
        if file.digest != digest || file.kind != kind {
            return Err(ClientError::Fixture(format!("{}: digest or kind does not match its name", path.display())));
        }
        Ok(file)
    }

    pub fn save(&self, kind: &str, request: &Value, reply: Value) -> Result<PathBuf, ClientError> {
        let digest = self.digest(kind, request);
        let file = FixtureFile {
            schema_version: SCHEMA_VERSION,
            digest: digest.clone(),
            kind: kind.to_string(),
            request: request.clone(),
            reply,
        };
        let io = |e: std::io::Error| ClientError::Fixture(e.to_string());
        fs::create_dir_all(&self.dir).map_err(io)?;
        let value = serde_json::to_value(&file).map_err(|e| ClientError::Fixture(e.to_string()))?;
        let mut text = serde_json::to_string_pretty(&sorted(&value)).map_err(|e| ClientError::Fixture(e.to_string()))?;
        text.push('\n');
        let path = self.path_for(&digest);
        // Write-then-rename keeps concurrent scene workers from seeing torn files.
        let tmp = self.dir.join(format!(".{digest}.{:?}.tmp", std::thread::current().id()));
        fs::write(&tmp, text).map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)?;
        Ok(path)
    }
}

/// Wraps a backend with a [`FixtureStore`].
#[derive(Debug, Clone)]
pub struct Fixtured<B> {
    inner: B,
    store: FixtureStore,
}

impl<B> Fixtured<B> {
    pub fn new(inner: B, store: FixtureStore) -> Self {
        Fixtured { inner, store }
    }

    pub fn store(&self) -> &FixtureStore {
        &self.store
    }

    fn through<R>(
        &self,
        kind: &str,
        request: Value,
        live: impl FnOnce() -> Result<R, ClientError>,
        encode: impl FnOnce(&R) -> Value,
        decode: impl FnOnce(&Value) -> Result<R, ClientError>,
    ) -> Result<R, ClientError> {
        match self.store.mode {
            FixtureMode::Passthrough => live(),
            FixtureMode::Replay => decode(&self.store.load(kind, &request)?.reply),
            FixtureMode::Record => {
                let reply = live()?;
                self.store.save(kind, &request, encode(&reply))?;
                Ok(reply)
            }
        }
    }
}

impl<B: ChatBackend> ChatBackend for Fixtured<B> {
    fn chat_complete(&self, req: &ChatRequest) -> Result<String, ClientError> {
        req.validate()?;
        let request = serde_json::to_value(req).map_err(|e| ClientError::InvalidRequest(e.to_string()))?;
        self.through(
            "chat",
            request,
            || self.inner.chat_complete(req),
            |text| Value::String(text.clone()),
            |reply| {
                reply
                    .as_str()
                    .map(str::to_string)
                    .ok_or_else(|| ClientError::Fixture("chat reply is not a string".into()))
            },
        )
    }
}

impl<B: ImageBackend> ImageBackend for Fixtured<B> {
    fn txt2img(&self, req: &Txt2ImgRequest) -> Result<GeneratedImage, ClientError> {
        req.validate()?;
        let request = serde_json::to_value(req).map_err(|e| ClientError::InvalidRequest(e.to_string()))?;
        self.through(
            "txt2img",
            request,
            || self.inner.txt2img(req),
            |img| json!({ "png_base64": encode_base64(&img.png), "seed": img.seed }),
            |reply| {
                let b64 = reply
                    .get("png_base64")
                    .and_then(Value::as_str)
                    .ok_or_else(|| ClientError::Fixture("txt2img reply lacks png_base64".into()))?;
                Ok(GeneratedImage { png: decode_png_base64(b64)?, seed: reply.get("seed").and_then(Value::as_i64) })
            },
        )
    }
}

/// A backend with no network behind it; pair with [`FixtureMode::Replay`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Offline;

impl ChatBackend for Offline {
    fn chat_complete(&self, _: &ChatRequest) -> Result<String, ClientError> {
        Err(ClientError::Backend { status: None, excerpt: "offline: no chat backend configured".into() })
    }
}

impl ImageBackend for Offline {
    fn txt2img(&self, _: &Txt2ImgRequest) -> Result<GeneratedImage, ClientError> {
        Err(ClientError::Backend { status: None, excerpt: "offline: no image backend configured".into() })
    }
}
