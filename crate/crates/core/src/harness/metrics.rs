//! Seed-level metrics and percentile-bootstrap confidence intervals.
//!
//! Episodes within one run seed are not independent, so the metric is
//! averaged within each seed first; uncertainty is then bootstrapped over
//! the seed-level estimates (resample with replacement, 2.5/97.5
//! percentiles of the resampled means).

use crate::plan::BeliefStep;
use crate::rng::{self};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const BOOTSTRAP_RESAMPLES: usize = 10_000;
#[allow(unused_imports)]
pub use crate::plan::WIN_THRESHOLD;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SeedSummary {
    pub seed: u64,
    pub mean_reward: f64,
    pub win_rate: f64,
    pub episode_rewards: Vec<f64>,
    /// Best valid pool score after refinement (induced method only).
    pub best_pool_score: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricsReport {
    pub env: String,
    pub method: String,
    pub per_seed: Vec<SeedSummary>,
    pub mean_reward: f64,
    pub reward_ci: (f64, f64),
    pub win_rate: f64,
    pub win_ci: (f64, f64),
    /// Mean belief entropy by step index over all evaluation episodes.
    pub entropy_curve: Vec<f64>,
    /// Fraction of episodes whose MAP belief equals the true latent state,
    /// by step index.
    pub map_accuracy_curve: Vec<f64>,
    /// Mean posterior mass on the true latent state, by step index.
    pub mass_on_true_curve: Vec<f64>,
    pub warnings: Vec<String>,
}

/// 95% percentile bootstrap over seed-level values.
pub fn bootstrap_ci(values: &[f64], resamples: usize, seed: u64) -> (f64, f64) {
    assert!(!values.is_empty());
    let mut rng = rng::derive(seed, &[0xb007]);
    let mut means = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut acc = 0.0;
        for _ in 0..values.len() {
            acc += values[rng.gen_range(0..values.len())];
        }
        means.push(acc / values.len() as f64);
    }
    means.sort_by(f64::total_cmp);
    let lo = means[((resamples as f64) * 0.025) as usize];
    let hi = means[(((resamples as f64) * 0.975) as usize).min(resamples - 1)];
    (lo, hi)
}

/// Step-indexed mean over ragged per-episode curves.
pub fn mean_curves(traces: &[&[BeliefStep]]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let max_len = traces.iter().map(|t| t.len()).max().unwrap_or(0);
    let mut entropy = Vec::with_capacity(max_len);
    let mut map_acc = Vec::with_capacity(max_len);
    let mut mass = Vec::with_capacity(max_len);
    for t in 0..max_len {
        let mut e = (0.0, 0u32);
        let mut m = (0.0, 0u32);
        let mut p = (0.0, 0u32);
        for trace in traces {
            if let Some(step) = trace.get(t) {
                if step.entropy.is_finite() {
                    e = (e.0 + step.entropy, e.1 + 1);
                }
                if let Some(c) = step.map_correct {
                    m = (m.0 + c as u32 as f64, m.1 + 1);
                }
                if let Some(v) = step.mass_on_true {
                    p = (p.0 + v, p.1 + 1);
                }
            }
        }
        entropy.push(if e.1 > 0 { e.0 / e.1 as f64 } else { f64::NAN });
        map_acc.push(if m.1 > 0 { m.0 / m.1 as f64 } else { f64::NAN });
        mass.push(if p.1 > 0 { p.0 / p.1 as f64 } else { f64::NAN });
    }
    (entropy, map_acc, mass)
}
