//! HTTP client for the model sidecar.
//!
//! Wire protocol (JSON over HTTP):
//!
//! ```text
//! POST /embed     {"texts": [..]}             -> {"embeddings": [[f32; dim], ..], "dim": dim}
//! POST /generate  {"prompts": [..], "k": k}   -> [{"candidates": [{"text", "score", "rank"}, ..]}, ..]
//! GET  /health                                -> {"dim": dim, ...model identifiers}
//! ```
//!
//! `/generate` answers with one object per prompt, in prompt order. Non-2xx
//! responses carry the reason in the body.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::embed::{Embedding, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::translate::{Candidate, Generator};

const MAX_BODY: u64 = 1 << 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub embeddings: Vec<Embedding>,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub prompts: Vec<String>,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptCandidates {
    pub candidates: Vec<Candidate>,
}

pub type GenerateResponse = Vec<PromptCandidates>;

#[derive(Debug, Clone)]
pub struct SidecarClient {
    base_url: String,
    agent: ureq::Agent,
}

impl SidecarClient {
    pub fn new(base_url: impl Into<String>, timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        SidecarClient {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            agent: config.into(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    fn read<T: DeserializeOwned>(path: &str, mut resp: ureq::http::Response<ureq::Body>) -> std::result::Result<T, String> {
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .with_config()
            .limit(MAX_BODY)
            .read_to_string()
            .map_err(|e| format!("{path}: reading response: {e}"))?;
        if !(200..300).contains(&status) {
            return Err(format!("{path}: HTTP {status}: {}", body.trim()));
        }
        serde_json::from_str(&body).map_err(|e| format!("{path}: malformed response: {e}"))
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(&self, path: &str, req: &Req) -> std::result::Result<Resp, String> {
        let resp = self
            .agent
            .post(format!("{}{path}", self.base_url))
            .send_json(req)
            .map_err(|e| format!("{path}: {e}"))?;
        Self::read(path, resp)
    }

    /// Model identifiers and embedding dimension reported by the sidecar.
    pub fn health(&self) -> Result<serde_json::Value> {
        let resp = self
            .agent
            .get(format!("{}/health", self.base_url))
            .call()
            .map_err(|e| Error::Invalid(format!("/health: {e}")))?;
        Self::read("/health", resp).map_err(Error::Invalid)
    }
}

impl EmbeddingProvider for SidecarClient {
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>> {
        let err = |message: String| Error::Embedding { batch: 0, message };
        let resp: EmbedResponse = self
            .post("/embed", &EmbedRequest { texts: texts.to_vec() })
            .map_err(err)?;
        if let Some(v) = resp.embeddings.iter().find(|v| v.len() != resp.dim) {
            return Err(err(format!("vector of length {} but dim = {}", v.len(), resp.dim)));
        }
        Ok(resp.embeddings)
    }
}

impl Generator for SidecarClient {
    fn generate(&self, prompts: &[String], k: usize) -> Result<Vec<Vec<Candidate>>> {
        let err = |message: String| Error::Generation { batch: 0, message };
        let resp: GenerateResponse = self
            .post(
                "/generate",
                &GenerateRequest {
                    prompts: prompts.to_vec(),
                    k,
                },
            )
            .map_err(err)?;
        if resp.len() != prompts.len() {
            return Err(err(format!("{} prompts but {} answers", prompts.len(), resp.len())));
        }
        Ok(resp.into_iter().map(|p| p.candidates).collect())
    }
}
