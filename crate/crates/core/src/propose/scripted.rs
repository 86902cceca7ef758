//! Deterministic proposer for reproducible runs: draws from the fixture
//! library of ground-truth programs and systematically defective variants.

use super::{Proposal, ProposalError};
use crate::dsl::golden::{self, DefectClass};
use crate::grid::EnvId;
use crate::propose::PromptBundle;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct ScriptedProposer {
    pub env: EnvId,
}

impl ScriptedProposer {
    /// Every batch contains the ground-truth model exactly once (at an
    /// rng-chosen slot) with defect variants in the other slots. Feedback in
    /// the bundle is ignored; the library is the whole repertoire.
    pub fn propose(
        &self,
        _bundle: &PromptBundle,
        count: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Result<Proposal, ProposalError>> {
        let classes = golden::defect_classes(self.env);
        let gt_slot = rng.gen_range(0..count.max(1));
        (0..count)
            .map(|slot| {
                if slot == gt_slot {
                    let s = golden::ground_truth_sources(self.env);
                    Ok(Proposal {
                        sources: [
                            s.initial.to_string(),
                            s.transition.to_string(),
                            s.observation.to_string(),
                            s.reward.to_string(),
                        ],
                        label: "ground-truth".to_string(),
                    })
                } else {
                    let class: DefectClass = classes[rng.gen_range(0..classes.len())];
                    let s = golden::defect_sources(self.env, class);
                    Ok(Proposal {
                        sources: [
                            s.initial.to_string(),
                            s.transition.to_string(),
                            s.observation.to_string(),
                            s.reward.to_string(),
                        ],
                        label: format!("defect:{}", class.name()),
                    })
                }
            })
            .collect()
    }
}
