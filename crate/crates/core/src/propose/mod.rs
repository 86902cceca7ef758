//! Model proposal: prompt assembly, the live HTTP client, and the
//! deterministic scripted proposer.

mod http;
mod levels;
mod prompt;
mod scripted;

pub use http::{extract_component_blocks, HttpProposer, API_KEY_VAR};
pub use levels::{description, PromptLevel};
pub use prompt::{
    build_initial_prompt, build_refinement_prompt, Feedback, PromptBundle, DEFAULT_CHAR_BUDGET,
};
pub use scripted::ScriptedProposer;

use crate::grid::EnvId;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum ProposalError {
    #[error("proposer configuration: {0}")]
    Config(String),
    #[error("http request failed: {0}")]
    Http(String),
    #[error("malformed completion: {0}")]
    Malformed(String),
}

/// One proposed model: four component sources plus a provenance label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Proposal {
    pub sources: [String; 4],
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProposerMode {
    #[default]
    Scripted,
    Http,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProposerConfig {
    pub mode: ProposerMode,
    pub endpoint: Option<String>,
    pub model_name: Option<String>,
    pub request_seed: u64,
    pub timeout_secs: u64,
    pub max_parallel: usize,
    pub temperature: f64,
    /// Directory receiving request/response logs for audit.
    pub audit_dir: Option<PathBuf>,
}

impl Default for ProposerConfig {
    fn default() -> ProposerConfig {
        ProposerConfig {
            mode: ProposerMode::Scripted,
            endpoint: None,
            model_name: None,
            request_seed: 0,
            timeout_secs: 120,
            max_parallel: 1,
            temperature: 0.7,
            audit_dir: None,
        }
    }
}

pub enum Proposer {
    Scripted(ScriptedProposer),
    Http(Box<HttpProposer>),
}

impl Proposer {
    pub fn build(config: &ProposerConfig, env: EnvId) -> Result<Proposer, ProposalError> {
        match config.mode {
            ProposerMode::Scripted => Ok(Proposer::Scripted(ScriptedProposer { env })),
            ProposerMode::Http => Ok(Proposer::Http(Box::new(HttpProposer::new(config.clone())?))),
        }
    }

    /// Requests up to `count` proposals. Scripted mode never errs; http mode
    /// reports per-slot failures so a round can proceed with fewer
    /// candidates.
    pub fn propose(
        &self,
        bundle: &PromptBundle,
        count: usize,
        rng: &mut ChaCha8Rng,
        audit_tag: &str,
    ) -> Vec<Result<Proposal, ProposalError>> {
        match self {
            Proposer::Scripted(s) => s.propose(bundle, count, rng),
            Proposer::Http(h) => h.propose(bundle, count, audit_tag),
        }
    }
}
