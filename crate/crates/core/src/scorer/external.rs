//! HTTP client for a chat-completion-style vision-language endpoint.

use std::sync::OnceLock;
use std::time::Duration;

use base64::Engine as _;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{Observation, ScoreRequest, Scorer, ScorerError};
use crate::gridworld::{DepthScan, HitKind};

pub const API_KEY_ENV: &str = "SEMNAV_VLM_KEY";
const DEFAULT_MODEL: &str = "gpt-4o";

pub fn likelihood_prompt(target_label: &str) -> String {
    format!(
        "Output only a floating point value denoting the likelihood of finding a {target_label} if I move in this direction."
    )
}

/// First decimal number in `reply`, clamped to `[0, 1]`.
pub fn extract_likelihood(reply: &str) -> Result<f64, ScorerError> {
    static NUMBER: OnceLock<Regex> = OnceLock::new();
    let re = NUMBER.get_or_init(|| Regex::new(r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)").unwrap());
    let m = re.find(reply).ok_or_else(|| ScorerError::Parse(reply.to_string()))?;
    let v: f64 = m
        .as_str()
        .parse()
        .map_err(|_| ScorerError::Parse(reply.to_string()))?;
    if !v.is_finite() {
        return Err(ScorerError::Parse(reply.to_string()));
    }
    Ok(v.clamp(0.0, 1.0))
}

#[derive(Debug, Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    image_b64: &'a str,
    temperature: f64,
}

#[derive(Debug, Deserialize)]
struct CompletionReply {
    text: String,
}

/// Blocking client. One request per call; the underlying agent pools
/// connections and is safe to share across threads.
#[derive(Debug, Clone)]
pub struct ExternalScorer {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl ExternalScorer {
    /// Reads the API key from `SEMNAV_VLM_KEY` if set.
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Result<Self, ScorerError> {
        Self::with_key(endpoint, timeout, std::env::var(API_KEY_ENV).ok())
    }

    pub fn with_key(
        endpoint: impl Into<String>,
        timeout: Duration,
        api_key: Option<String>,
    ) -> Result<Self, ScorerError> {
        let endpoint = endpoint.into();
        if !(endpoint.starts_with("http://") || endpoint.starts_with("https://")) {
            return Err(ScorerError::Config(format!("endpoint `{endpoint}` is not an http(s) URL")));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Ok(Self {
            endpoint,
            model: DEFAULT_MODEL.to_string(),
            api_key,
            agent,
        })
    }

    pub fn model(mut self, model: impl Into<String>) -> Self {
        self.model = model.into();
        self
    }

    fn query(&self, prompt: &str, image: &[u8]) -> Result<String, ScorerError> {
        let image_b64 = base64::engine::general_purpose::STANDARD.encode(image);
        let body = CompletionRequest {
            model: &self.model,
            prompt,
            image_b64: &image_b64,
            temperature: 0.0,
        };
        let mut req = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| ScorerError::Unavailable(e.to_string()))?;
        let reply: CompletionReply = resp
            .body_mut()
            .read_json()
            .map_err(|e| ScorerError::Parse(e.to_string()))?;
        Ok(reply.text)
    }
}

impl Scorer for ExternalScorer {
    fn score(&self, req: &ScoreRequest) -> Result<f64, ScorerError> {
        let Observation::Image(image) = &req.observation else {
            return Err(ScorerError::WrongPayload);
        };
        let text = self.query(&likelihood_prompt(&req.target_label), image)?;
        extract_likelihood(&text)
    }

    fn needs_image(&self) -> bool {
        true
    }
}

/// Grayscale egocentric depth strip: one column per ray, nearer hits drawn
/// taller and brighter, target hits at full intensity.
pub fn render_depth_png(scan: &DepthScan) -> Vec<u8> {
    const HEIGHT: usize = 64;
    let width = scan.rays.len().max(1);
    let mut pixels = vec![0u8; width * HEIGHT];
    // Rays run right-to-left in image space (counterclockwise offsets are on the left).
    for (i, ray) in scan.rays.iter().rev().enumerate() {
        let nearness = 1.0 - (ray.range / scan.max_range).clamp(0.0, 1.0);
        if ray.kind == HitKind::MaxRange {
            continue;
        }
        let half = ((HEIGHT as f64 / 2.0) * (0.15 + 0.85 * nearness)).round() as usize;
        let level = match ray.kind {
            HitKind::Target => 255,
            _ => (60.0 + 150.0 * nearness).round() as u8,
        };
        let top = HEIGHT / 2 - half.min(HEIGHT / 2);
        let bottom = (HEIGHT / 2 + half).min(HEIGHT);
        for row in top..bottom {
            pixels[row * width + i] = level;
        }
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, HEIGHT as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().expect("in-memory png header");
        writer.write_image_data(&pixels).expect("in-memory png data");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reply_parsing() {
        assert_eq!(extract_likelihood("0.75").unwrap(), 0.75);
        assert_eq!(extract_likelihood("likelihood: 0.6").unwrap(), 0.6);
        assert_eq!(extract_likelihood("1.7").unwrap(), 1.0);
        assert_eq!(extract_likelihood("-0.2").unwrap(), 0.0);
        assert_eq!(extract_likelihood(".5 or so").unwrap(), 0.5);
        assert!(extract_likelihood("no idea").is_err());
    }

    #[test]
    fn prompt_text() {
        assert_eq!(
            likelihood_prompt("couch"),
            "Output only a floating point value denoting the likelihood of finding a couch if I move in this direction."
        );
    }

    #[test]
    fn rejects_non_http_endpoint() {
        assert!(ExternalScorer::with_key("ftp://x", Duration::from_secs(1), None).is_err());
    }
}
