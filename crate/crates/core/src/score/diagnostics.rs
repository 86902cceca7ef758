//! Local failure diagnostics mined from filter traces: high-distance
//! trajectory segments and reward/termination mismatches, rendered as a
//! bounded text block for refinement prompts.

use super::{ExecErrorAt, ScoreReport};
use crate::dsl::value::record_to_value;
use crate::dsl::{EvalBudget, ModelEval, ModelPrograms};
use crate::grid::Trajectory;
use serde::{Deserialize, Serialize};

/// Window length for segment mining.
const SEGMENT_WINDOW: usize = 3;
/// Segments qualify when their mean expected distance reaches one full
/// indicator-term mismatch.
const SEGMENT_THRESHOLD: f64 = 1.0;
const TOP_SEGMENTS: usize = 5;
const RENDER_CAP: usize = 4000;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WorstSegment {
    pub trajectory: usize,
    /// Step range [start, end) within the trajectory.
    pub start: usize,
    pub end: usize,
    pub mean_distance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RewardMismatch {
    pub trajectory: usize,
    pub step: usize,
    pub predicted_reward: f64,
    pub predicted_done: bool,
    pub realized_reward: f64,
    pub realized_done: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct DiagnosticsBundle {
    /// Ordered by descending mean observation distance.
    pub worst_segments: Vec<WorstSegment>,
    pub reward_mismatches: Vec<RewardMismatch>,
    pub execution_errors: Vec<ExecErrorAt>,
}

/// Mines a score report's traces for concrete failure evidence. Reward and
/// termination predictions are replayed through the model's reward program
/// along each step's highest-weight particle transition.
pub fn extract_diagnostics(
    report: &ScoreReport,
    model: &ModelPrograms,
    dataset: &[Trajectory],
    budget: &EvalBudget,
) -> DiagnosticsBundle {
    let mut bundle = DiagnosticsBundle {
        execution_errors: report.execution_errors.clone(),
        ..DiagnosticsBundle::default()
    };

    // Worst segments: sliding windows over expected distance, greedy
    // non-overlapping pick per trajectory.
    let mut candidates: Vec<WorstSegment> = Vec::new();
    for (ti, trace) in report.traces.iter().enumerate() {
        let d: Vec<f64> = trace.steps.iter().map(|s| s.expected_distance).collect();
        if d.len() < SEGMENT_WINDOW {
            continue;
        }
        for start in 0..=(d.len() - SEGMENT_WINDOW) {
            let mean = d[start..start + SEGMENT_WINDOW].iter().sum::<f64>() / SEGMENT_WINDOW as f64;
            if mean >= SEGMENT_THRESHOLD {
                candidates.push(WorstSegment {
                    trajectory: ti,
                    start,
                    end: start + SEGMENT_WINDOW,
                    mean_distance: mean,
                });
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.mean_distance
            .total_cmp(&a.mean_distance)
            .then(a.trajectory.cmp(&b.trajectory))
            .then(a.start.cmp(&b.start))
    });
    for c in candidates {
        if bundle.worst_segments.len() >= TOP_SEGMENTS {
            break;
        }
        let overlaps = bundle
            .worst_segments
            .iter()
            .any(|s| s.trajectory == c.trajectory && c.start < s.end && s.start < c.end);
        if !overlaps {
            bundle.worst_segments.push(c);
        }
    }

    // Reward/termination mismatches along MAP transitions.
    let mut eval = ModelEval::new(model, *budget);
    for (ti, (trace, traj)) in report.traces.iter().zip(dataset).enumerate() {
        for (t, (st, realized)) in trace.steps.iter().zip(&traj.steps).enumerate() {
            let Some((parent, next)) = &st.map_transition else { continue };
            match eval.reward(&record_to_value(parent), realized.action, &record_to_value(next)) {
                Ok((pr, pd)) => {
                    if (pr - realized.reward).abs() > 1e-9 || pd != realized.done {
                        bundle.reward_mismatches.push(RewardMismatch {
                            trajectory: ti,
                            step: t,
                            predicted_reward: pr,
                            predicted_done: pd,
                            realized_reward: realized.reward,
                            realized_done: realized.done,
                        });
                    }
                }
                Err(e) => bundle.execution_errors.push(ExecErrorAt {
                    trajectory: ti,
                    step: t,
                    message: e.to_string(),
                }),
            }
        }
    }
    bundle
}

impl DiagnosticsBundle {
    pub fn is_empty(&self) -> bool {
        self.worst_segments.is_empty()
            && self.reward_mismatches.is_empty()
            && self.execution_errors.is_empty()
    }

    /// Plain-text rendering for prompt injection, capped at 4000 chars.
    /// Execution errors render first; they are the strongest repair signal.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        if self.is_empty() {
            out.push_str("no failure diagnostics: no execution errors, no high-distance segments, no reward mismatches\n");
            return out;
        }
        for e in &self.execution_errors {
            out.push_str(&format!(
                "execution error: trajectory {} step {}: {}\n",
                e.trajectory, e.step, e.message
            ));
        }
        for s in &self.worst_segments {
            out.push_str(&format!(
                "high observation distance: trajectory {} steps {}..{} mean distance {:.3}\n",
                s.trajectory, s.start, s.end, s.mean_distance
            ));
        }
        for m in &self.reward_mismatches {
            out.push_str(&format!(
                "reward mismatch: trajectory {} step {}: predicted (r={:.4}, done={}) realized (r={:.4}, done={})\n",
                m.trajectory, m.step, m.predicted_reward, m.predicted_done, m.realized_reward, m.realized_done
            ));
        }
        if out.len() > RENDER_CAP {
            out.truncate(RENDER_CAP - 15);
            out.push_str("\n...truncated\n");
        }
        out
    }
}
