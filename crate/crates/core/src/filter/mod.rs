//! Bootstrap particle filtering over candidate-model latent states with a
//! distance-kernel observation likelihood.

mod kernel;
mod pf;

pub use kernel::{kernel_weight, obs_distance, KernelParams};
pub use pf::{
    belief_diagnostics, rejuvenate, BeliefDiagnostics, FilterRun, Particle, ParticleBelief,
    RejuvEvent, StepTrace,
};

use crate::dsl::ExecError;
use crate::par::ExecMode;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Particle count K.
    pub particles: usize,
    pub kernel: KernelParams,
    pub rejuvenation_enabled: bool,
    /// Fresh rollouts allowed per rejuvenation trigger, as a multiple of K.
    pub rejuvenation_cap: u32,
    /// Cumulative rollout budget per trajectory, as a multiple of K.
    pub rejuvenation_trajectory_cap: u32,
    /// Planning-mode evidence: zero the weight of particles whose predicted
    /// termination contradicts the realized done flag, and prune
    /// inconsistent rejuvenation rollouts. The kernel score never uses
    /// this; it stays observation-only.
    #[serde(default)]
    pub condition_on_termination: bool,
    #[serde(default)]
    pub exec: ExecMode,
}

impl Default for FilterConfig {
    fn default() -> FilterConfig {
        FilterConfig {
            particles: 10,
            kernel: KernelParams::default(),
            rejuvenation_enabled: true,
            rejuvenation_cap: 20,
            rejuvenation_trajectory_cap: 100,
            condition_on_termination: false,
            exec: ExecMode::default(),
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum FilterError {
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("belief degenerate: all kernel weights zero and rejuvenation disabled")]
    DegenerateBelief,
    #[error("belief is empty")]
    EmptyBelief,
}

/// Distance assigned to a fully degenerate step; its score contribution is
/// the floor penalty -50/kappa.
pub const DEGENERATE_DISTANCE: f64 = 50.0;
