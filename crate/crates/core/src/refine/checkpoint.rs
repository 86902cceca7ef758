//! Pool checkpoints: every candidate's sources, score, and lineage, written
//! each round so runs can resume.

use super::{CandidatePool, PoolNode};
use crate::dsl::{CandidateModel, ModelScore, Provenance};
use crate::score::DisagreementContext;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("checkpoint format: {0}")]
    Format(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeRecord {
    id: u64,
    sources: [String; 4],
    score: ModelScore,
    parent_id: Option<u64>,
    expansions: u32,
    visits: u32,
    provenance: Provenance,
    label: String,
    diagnostics: String,
    qbc: Vec<DisagreementContext>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    round_index: u32,
    total_expansions: u32,
    nodes: Vec<NodeRecord>,
}

pub fn save_checkpoint(pool: &CandidatePool, path: &Path) -> Result<(), CheckpointError> {
    let file = CheckpointFile {
        version: CHECKPOINT_VERSION,
        round_index: pool.round_index,
        total_expansions: pool.total_expansions,
        nodes: pool
            .nodes
            .iter()
            .map(|n| NodeRecord {
                id: n.model.id,
                sources: n.model.sources.clone(),
                score: n.model.score,
                parent_id: n.model.parent_id,
                expansions: n.model.expansions,
                visits: n.model.visits,
                provenance: n.model.provenance,
                label: n.label.clone(),
                diagnostics: n.diagnostics.clone(),
                qbc: n.qbc.clone(),
            })
            .collect(),
    };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut bytes = serde_json::to_vec_pretty(&file).map_err(|e| CheckpointError::Format(e.to_string()))?;
    bytes.push(b'\n');
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<CandidatePool, CheckpointError> {
    let bytes = std::fs::read(path)?;
    let file: CheckpointFile =
        serde_json::from_slice(&bytes).map_err(|e| CheckpointError::Format(e.to_string()))?;
    if file.version != CHECKPOINT_VERSION {
        return Err(CheckpointError::Format(format!("unsupported version {}", file.version)));
    }
    let nodes = file
        .nodes
        .into_iter()
        .map(|r| {
            let (mut model, _) = CandidateModel::from_sources(r.id, r.sources, r.provenance);
            // A recorded score only stands if the sources still parse.
            if model.programs.is_some() {
                model.score = r.score;
            }
            model.parent_id = r.parent_id;
            model.expansions = r.expansions;
            model.visits = r.visits;
            PoolNode { model, label: r.label, diagnostics: r.diagnostics, qbc: r.qbc }
        })
        .collect();
    Ok(CandidatePool {
        nodes,
        round_index: file.round_index,
        total_expansions: file.total_expansions,
    })
}
