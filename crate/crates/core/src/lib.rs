//! Executable POMDP world-model induction and belief-space planning.
//!
//! The crate induces four-component world models (initial-state, transition,
//! observation, reward programs in a sandboxed expression DSL) from
//! observation–action–reward trajectories, scores candidates with a
//! particle-filtered distance-kernel likelihood, refines them in a UCB1
//! proposal tree, and plans in belief space with the selected model.

pub mod dsl;
pub mod filter;
pub mod grid;
pub mod harness;
pub mod par;
pub mod plan;
pub mod propose;
pub mod refine;
pub mod rng;
pub mod score;
