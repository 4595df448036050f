use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::transport::{post_with_retry, HttpTransport, ReqwestTransport, RetryPolicy};
use super::ClientError;
use crate::domain::{GenerationParams, T2IPrompt};

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];

pub const DEFAULT_REFINER_CHECKPOINT: &str = "sd_xl_refiner_1.0";

/// How the refiner pass is requested from the backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RefinerMode {
    /// Refiner fields of the txt2img call; the refiner takes over for the
    /// final `switch_at` fraction of the schedule.
    Integrated { checkpoint: String, switch_at: f64 },
    /// A second img2img call over the base image at `denoise` strength.
    TwoPass { checkpoint: String, denoise: f64 },
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Txt2ImgRequest {
    pub prompt: String,
    pub negative_prompt: String,
    pub steps: u32,
    pub sampler_name: String,
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub seed: Option<i64>,
    pub refiner: RefinerMode,
    #[serde(default)]
    pub base_checkpoint: Option<String>,
}

impl Txt2ImgRequest {
    pub fn from_prompt(prompt: &T2IPrompt, params: &GenerationParams, refiner_checkpoint: &str, two_pass: bool) -> Self {
        let checkpoint = refiner_checkpoint.to_string();
        let refiner = if two_pass {
            RefinerMode::TwoPass { checkpoint, denoise: params.refiner_denoise }
        } else {
            RefinerMode::Integrated { checkpoint, switch_at: params.refiner_denoise }
        };
        Txt2ImgRequest {
            prompt: prompt.positive.clone(),
            negative_prompt: prompt.negative.clone(),
            steps: params.steps,
            sampler_name: params.sampler_name.clone(),
            width: params.width,
            height: params.height,
            seed: params.seed,
            refiner,
            base_checkpoint: None,
        }
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        if self.steps < 1 {
            return Err(ClientError::InvalidRequest("steps must be >= 1".into()));
        }
        let fraction = match &self.refiner {
            RefinerMode::Integrated { switch_at, .. } => Some(*switch_at),
            RefinerMode::TwoPass { denoise, .. } => Some(*denoise),
            RefinerMode::Disabled => None,
        };
        if fraction.is_some_and(|f| !(0.0..=1.0).contains(&f)) {
            return Err(ClientError::InvalidRequest("refiner fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }

    fn common_fields(&self) -> Value {
        json!({
            "prompt": self.prompt,
            "negative_prompt": self.negative_prompt,
            "steps": self.steps,
            "sampler_name": self.sampler_name,
            "width": self.width,
            "height": self.height,
            "seed": self.seed.unwrap_or(-1),
        })
    }

    /// `/sdapi/v1/txt2img` request body.
    pub fn to_wire(&self) -> Value {
        let mut body = self.common_fields();
        if let RefinerMode::Integrated { checkpoint, switch_at } = &self.refiner {
            body["refiner_checkpoint"] = json!(checkpoint);
            body["refiner_switch_at"] = json!(switch_at);
        }
        if let Some(base) = &self.base_checkpoint {
            body["override_settings"] = json!({ "sd_model_checkpoint": base });
        }
        body
    }

    /// `/sdapi/v1/img2img` body for the second pass, when two-pass is selected.
    pub fn refine_wire(&self, init_image_b64: &str, seed: Option<i64>) -> Option<Value> {
        let RefinerMode::TwoPass { checkpoint, denoise } = &self.refiner else {
            return None;
        };
        let mut body = self.common_fields();
        body["init_images"] = json!([init_image_b64]);
        body["denoising_strength"] = json!(denoise);
        body["override_settings"] = json!({ "sd_model_checkpoint": checkpoint });
        if let Some(seed) = seed.or(self.seed) {
            body["seed"] = json!(seed);
        }
        Some(body)
    }

    /// Everything that will be sent, for the stage log.
    pub fn wire_log(&self) -> Value {
        let mut log = json!({ "txt2img": self.to_wire() });
        if let Some(second) = self.refine_wire("<base image>", None) {
            log["img2img"] = second;
        }
        log
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedImage {
    pub png: Vec<u8>,
    /// Seed the backend reports having used.
    pub seed: Option<i64>,
}

pub trait ImageBackend: Send + Sync {
    fn txt2img(&self, req: &Txt2ImgRequest) -> Result<GeneratedImage, ClientError>;
}

impl<T: ImageBackend + ?Sized> ImageBackend for &T {
    fn txt2img(&self, req: &Txt2ImgRequest) -> Result<GeneratedImage, ClientError> {
        (**self).txt2img(req)
    }
}

impl<T: ImageBackend + ?Sized> ImageBackend for Box<T> {
    fn txt2img(&self, req: &Txt2ImgRequest) -> Result<GeneratedImage, ClientError> {
        (**self).txt2img(req)
    }
}

impl<T: ImageBackend + ?Sized> ImageBackend for std::sync::Arc<T> {
    fn txt2img(&self, req: &Txt2ImgRequest) -> Result<GeneratedImage, ClientError> {
        (**self).txt2img(req)
    }
}

/// Decodes a base64 image (optionally a `data:` URL) and checks it is a PNG.
pub fn decode_png_base64(data: &str) -> Result<Vec<u8>, ClientError> {
    let payload = match data.split_once("base64,") {
        Some((prefix, rest)) if prefix.starts_with("data:") => rest,
        _ => data,
    };
    let bytes = STANDARD
        .decode(payload.trim())
        .map_err(|e| ClientError::ImageDecode(e.to_string()))?;
    if !bytes.starts_with(&PNG_SIGNATURE) {
        return Err(ClientError::ImageDecode("payload is not a PNG".into()));
    }
    Ok(bytes)
}

pub(crate) fn encode_base64(bytes: &[u8]) -> String {
    STANDARD.encode(bytes)
}

/// Client for the Automatic1111 WebUI API.
pub struct Automatic1111<T = ReqwestTransport> {
    base_url: String,
    transport: T,
    pub retry: RetryPolicy,
    pub timeout: Duration,
}

impl Automatic1111<ReqwestTransport> {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self::with_transport(base_url, ReqwestTransport::default())
    }
}

impl<T: HttpTransport> Automatic1111<T> {
    pub fn with_transport(base_url: impl Into<String>, transport: T) -> Self {
        Automatic1111 {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            transport,
            retry: RetryPolicy::default(),
            timeout: Duration::from_secs(600),
        }
    }

    fn call(&self, path: &str, body: &Value) -> Result<(String, Option<i64>), ClientError> {
        let url = format!("{}{path}", self.base_url);
        let text = post_with_retry(&self.transport, &self.retry, &url, None, body, self.timeout)?;
        let reply: Value = serde_json::from_str(&text)
            .map_err(|e| ClientError::ImageDecode(format!("unparseable reply: {e}")))?;
        let image = reply
            .pointer("/images/0")
            .and_then(Value::as_str)
            .ok_or_else(|| ClientError::ImageDecode("reply carries no images".into()))?
            .to_string();
        // `info` is itself a JSON document encoded as a string.
        let seed = reply
            .get("info")
            .and_then(Value::as_str)
            .and_then(|s| serde_json::from_str::<Value>(s).ok())
            .and_then(|info| info.get("seed").and_then(Value::as_i64));
        Ok((image, seed))
    }
}

impl<T: HttpTransport> ImageBackend for Automatic1111<T> {
    fn txt2img(&self, req: &Txt2ImgRequest) -> Result<GeneratedImage, ClientError> {
        req.validate()?;
        let (mut image, seed) = self.call("/sdapi/v1/txt2img", &req.to_wire())?;
        decode_png_base64(&image)?;
        if let Some(second) = req.refine_wire(&image, seed) {
            image = self.call("/sdapi/v1/img2img", &second)?.0;
        }
        Ok(GeneratedImage { png: decode_png_base64(&image)?, seed })
    }
}
