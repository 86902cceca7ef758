//! Refinement loop: a persistent candidate pool organized as a tree, UCB1
//! parent selection, batched proposal and scoring, and near-best softmax
//! final selection.

mod checkpoint;

pub use checkpoint::{load_checkpoint, save_checkpoint};

use crate::dsl::{CandidateModel, EvalBudget, ModelScore, Provenance};
use crate::filter::FilterConfig;
use crate::grid::{EnvId, Trajectory};
use crate::par::par_map_indexed;
use crate::propose::{
    build_initial_prompt, build_refinement_prompt, PromptLevel, Proposer,
};
use crate::rng::{self, tag};
use crate::score::{extract_diagnostics, qbc_contexts, score_model, DisagreementContext, ScoreReport};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Disagreement contexts injected per refinement prompt.
const QBC_TOP_K: usize = 5;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RefinementConfig {
    /// Rounds J.
    pub rounds: u32,
    /// Candidates per round M.
    pub candidates_per_round: u32,
    pub c_ucb: f64,
    pub selection_temperature: f64,
}

impl Default for RefinementConfig {
    fn default() -> RefinementConfig {
        RefinementConfig {
            rounds: 5,
            candidates_per_round: 5,
            c_ucb: 1.0,
            selection_temperature: 0.1,
        }
    }
}

/// A pool entry: the candidate plus the feedback objects its refinement
/// prompt will carry.
#[derive(Debug, Clone)]
pub struct PoolNode {
    pub model: CandidateModel,
    pub label: String,
    pub diagnostics: String,
    pub qbc: Vec<DisagreementContext>,
}

#[derive(Debug, Clone, Default)]
pub struct CandidatePool {
    /// Nodes in insertion (id) order; never removed, including invalid ones.
    pub nodes: Vec<PoolNode>,
    pub round_index: u32,
    /// Total expansions executed; the virtual root's visit count.
    pub total_expansions: u32,
}

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("pool holds no valid-score candidate")]
    NoValidModel,
}

impl CandidatePool {
    pub fn new() -> CandidatePool {
        CandidatePool::default()
    }

    pub fn get(&self, id: u64) -> Option<&PoolNode> {
        self.nodes.iter().find(|n| n.model.id == id)
    }

    fn get_mut(&mut self, id: u64) -> Option<&mut PoolNode> {
        self.nodes.iter_mut().find(|n| n.model.id == id)
    }

    pub fn next_id(&self) -> u64 {
        self.nodes.iter().map(|n| n.model.id + 1).max().unwrap_or(0)
    }

    /// Highest valid score in the pool.
    pub fn best_score(&self) -> Option<f64> {
        self.nodes.iter().filter_map(|n| n.model.score.valid()).fold(None, |acc, s| {
            Some(match acc {
                None => s,
                Some(a) => a.max(s),
            })
        })
    }

    /// Mean score of the candidates generated from `id`; a never-expanded
    /// node is its own evidence; a node with neither falls to -inf.
    fn mean_generated_score(&self, id: u64) -> f64 {
        let child_scores: Vec<f64> = self
            .nodes
            .iter()
            .filter(|n| n.model.parent_id == Some(id))
            .filter_map(|n| n.model.score.valid())
            .collect();
        if !child_scores.is_empty() {
            return child_scores.iter().sum::<f64>() / child_scores.len() as f64;
        }
        self.get(id)
            .and_then(|n| n.model.score.valid())
            .unwrap_or(f64::NEG_INFINITY)
    }

    /// UCB1 value of a node under the smoothed-denominator rule.
    pub fn ucb_value(&self, id: u64, c_ucb: f64) -> f64 {
        let node = self.get(id).expect("known node");
        let n_parent = match node.model.parent_id {
            Some(p) => self.get(p).map_or(0, |n| n.model.visits),
            None => self.total_expansions,
        };
        let exploration = ((n_parent.max(1) as f64).ln() / (node.model.expansions as f64 + 1.0)).sqrt();
        self.mean_generated_score(id) + c_ucb * exploration
    }

    /// UCB1 parent choice; `None` on an empty pool (root prompt path).
    /// Invalid-score nodes participate so their diagnostics can seed the
    /// next prompt; ties break toward the lowest node id.
    pub fn ucb_select(&self, c_ucb: f64) -> Option<u64> {
        self.nodes
            .iter()
            .map(|n| (n.model.id, self.ucb_value(n.model.id, c_ucb)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .map(|(id, _)| id)
    }

    /// Books one expansion of `parent` (or of the virtual root).
    fn record_expansion(&mut self, parent: Option<u64>) {
        self.total_expansions += 1;
        let mut cursor = parent;
        let mut own = true;
        while let Some(id) = cursor {
            let node = self.get_mut(id).expect("parent chain stays in pool");
            if own {
                node.model.expansions += 1;
                own = false;
            }
            node.model.visits += 1;
            cursor = node.model.parent_id;
        }
    }

    /// Near-best set: candidates within one empirical (population) standard
    /// deviation of the best valid score.
    pub fn near_best(&self) -> Vec<u64> {
        let scored: Vec<(u64, f64)> = self
            .nodes
            .iter()
            .filter_map(|n| n.model.score.valid().map(|s| (n.model.id, s)))
            .collect();
        if scored.is_empty() {
            return Vec::new();
        }
        let best = scored.iter().map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
        let mean = scored.iter().map(|(_, s)| *s).sum::<f64>() / scored.len() as f64;
        let var = scored.iter().map(|(_, s)| (s - mean) * (s - mean)).sum::<f64>() / scored.len() as f64;
        let std = var.sqrt();
        scored.into_iter().filter(|(_, s)| *s >= best - std).map(|(id, _)| id).collect()
    }
}

/// Softmax selection weights over the near-best set at temperature `t`:
/// `p_j = exp(S_j/t) / sum_k exp(S_k/t)` for near-best members j.
pub fn selection_probabilities(pool: &CandidatePool, temperature: f64) -> Vec<(u64, f64)> {
    let near = pool.near_best();
    let scores: Vec<f64> = near
        .iter()
        .map(|id| pool.get(*id).unwrap().model.score.valid().expect("near-best is valid"))
        .collect();
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|s| ((s - best) / temperature).exp()).collect();
    let total: f64 = weights.iter().sum();
    near.into_iter().zip(weights).map(|(id, w)| (id, w / total)).collect()
}

/// Softmax selection over the near-best set at temperature `t`; the argmax
/// is always a member. Errors when no valid-score candidate exists.
pub fn select_final(
    pool: &CandidatePool,
    temperature: f64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<u64, SelectError> {
    let probs = selection_probabilities(pool, temperature);
    if probs.is_empty() {
        return Err(SelectError::NoValidModel);
    }
    let u: f64 = rng.gen::<f64>();
    let mut acc = 0.0;
    for (id, p) in &probs {
        acc += p;
        if u < acc {
            return Ok(*id);
        }
    }
    Ok(probs.last().expect("nonempty").0)
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct RoundReport {
    pub round: u32,
    pub parent: Option<u64>,
    pub new_ids: Vec<u64>,
    pub warnings: Vec<String>,
}

/// Everything one round needs beyond the pool itself.
pub struct RoundCtx<'a> {
    pub proposer: &'a Proposer,
    pub env: EnvId,
    pub level: PromptLevel,
    pub dataset: &'a [Trajectory],
    pub filter: &'a FilterConfig,
    pub budget: &'a EvalBudget,
    pub config: &'a RefinementConfig,
    pub run_seed: u64,
}

/// One REx round: select a parent (or the root prompt), request M
/// candidates, parse and score them in parallel, then insert them with
/// their diagnostics and committee-disagreement contexts.
pub fn rex_round(pool: &mut CandidatePool, ctx: &RoundCtx<'_>) -> RoundReport {
    let round = pool.round_index;
    let mut report = RoundReport { round, ..RoundReport::default() };
    let mut rng = rng::derive(ctx.run_seed, &[tag::ROUND, round as u64]);

    let parent = pool.ucb_select(ctx.config.c_ucb);
    report.parent = parent;
    let bundle = match parent.and_then(|id| pool.get(id)) {
        None => build_initial_prompt(ctx.env, ctx.level, ctx.dataset),
        Some(node) => build_refinement_prompt(
            ctx.env,
            ctx.level,
            ctx.dataset,
            node.model.sources.clone(),
            node.model.score,
            node.diagnostics.clone(),
            node.qbc.clone(),
        ),
    };

    let audit_tag = format!("round{round}");
    let proposals =
        ctx.proposer.propose(&bundle, ctx.config.candidates_per_round as usize, &mut rng, &audit_tag);

    // Assign ids up front so parallel scoring stays order-independent.
    let mut slots = Vec::new();
    let mut next_id = pool.next_id();
    for (slot, proposal) in proposals.into_iter().enumerate() {
        match proposal {
            Ok(p) => {
                slots.push((next_id, p));
                next_id += 1;
            }
            Err(e) => report.warnings.push(format!("round {round} slot {slot}: {e}")),
        }
    }

    let provenance = match ctx.proposer {
        Proposer::Scripted(_) => Provenance::Scripted,
        Proposer::Http(_) => Provenance::Llm,
    };
    let scored: Vec<(CandidateModel, String, Option<ScoreReport>)> =
        par_map_indexed(ctx.filter.exec, slots.len(), |i| {
            let (id, proposal) = &slots[i];
            let (mut model, parse_err) =
                CandidateModel::from_sources(*id, proposal.sources.clone(), provenance);
            model.parent_id = parent;
            let mut diag = parse_err.map(|e| format!("parse error: {e}\n")).unwrap_or_default();
            let report = model.programs.as_ref().map(|programs| {
                let r = score_model(
                    programs,
                    ctx.dataset,
                    ctx.filter,
                    ctx.budget,
                    rng::mix(ctx.run_seed, &[tag::SCORE, *id]),
                );
                model.score = r.total_score;
                diag.push_str(
                    &extract_diagnostics(&r, programs, ctx.dataset, ctx.budget).render_text(),
                );
                r
            });
            (model, diag, report)
        });

    // Sequentially grow the committee and attach QBC contexts, per the
    // round's insertion order.
    for ((model, diagnostics, score_report), (_, proposal)) in scored.into_iter().zip(&slots) {
        let id = model.id;
        pool.nodes.push(PoolNode {
            model,
            label: proposal.label.clone(),
            diagnostics,
            qbc: Vec::new(),
        });
        if let Some(r) = score_report {
            let committee: Vec<&crate::dsl::ComponentProgram> = pool
                .nodes
                .iter()
                .filter_map(|n| n.model.programs.as_ref().map(|p| &p.transition))
                .collect();
            let qbc = qbc_contexts(
                &committee,
                &r.traces,
                ctx.env.actions(),
                QBC_TOP_K,
                ctx.budget,
                rng::mix(ctx.run_seed, &[tag::QBC, id]),
            );
            pool.get_mut(id).expect("just inserted").qbc = qbc;
        }
        report.new_ids.push(id);
    }

    pool.record_expansion(parent);
    pool.round_index += 1;
    report
}

/// Re-scores every candidate on an extended dataset (scores are
/// dataset-relative), runs one fresh round, and reselects. Returns the
/// selected node id.
pub fn online_update(pool: &mut CandidatePool, ctx: &RoundCtx<'_>) -> Result<(u64, RoundReport), SelectError> {
    assert!(!ctx.dataset.is_empty());
    let rescales: Vec<(usize, Option<(ModelScore, String)>)> =
        par_map_indexed(ctx.filter.exec, pool.nodes.len(), |i| {
            let node = &pool.nodes[i];
            let out = node.model.programs.as_ref().map(|programs| {
                let r = score_model(
                    programs,
                    ctx.dataset,
                    ctx.filter,
                    ctx.budget,
                    rng::mix(ctx.run_seed, &[tag::SCORE, node.model.id, ctx.dataset.len() as u64]),
                );
                let diag = extract_diagnostics(&r, programs, ctx.dataset, ctx.budget).render_text();
                (r.total_score, diag)
            });
            (i, out)
        });
    for (i, out) in rescales {
        if let Some((score, diag)) = out {
            pool.nodes[i].model.score = score;
            pool.nodes[i].diagnostics = diag;
        }
    }
    let report = rex_round(pool, ctx);
    let mut rng = rng::derive(ctx.run_seed, &[tag::SELECT, pool.round_index as u64]);
    let selected = select_final(pool, ctx.config.selection_temperature, &mut rng)?;
    Ok((selected, report))
}

#[cfg(test)]
mod tests;
