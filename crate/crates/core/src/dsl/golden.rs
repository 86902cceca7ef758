//! Hand-written model corpus: ground-truth programs for the five tasks and
//! the defect library the scripted proposer draws from.

use super::model::ModelPrograms;
use crate::grid::EnvId;
use serde::{Deserialize, Serialize};

const COMMON_TRANSITION: &str = include_str!("../../programs/common/transition.pmdl");
const COMMON_OBSERVE: &str = include_str!("../../programs/common/observe.pmdl");

const EMPTY_INIT: &str = include_str!("../../programs/empty/init.pmdl");
const EMPTY_REWARD: &str = include_str!("../../programs/empty/reward.pmdl");
const CORNERS_INIT: &str = include_str!("../../programs/corners/init.pmdl");
const CORNERS_REWARD: &str = include_str!("../../programs/corners/reward.pmdl");
const LAVA_INIT: &str = include_str!("../../programs/lava/init.pmdl");
const LAVA_INIT_STOCH: &str = include_str!("../../programs/lava/init_stoch.pmdl");
const LAVA_REWARD: &str = include_str!("../../programs/lava/reward.pmdl");
const FOURROOMS_INIT: &str = include_str!("../../programs/fourrooms/init.pmdl");
const FOURROOMS_REWARD: &str = include_str!("../../programs/fourrooms/reward.pmdl");
const UNLOCK_INIT: &str = include_str!("../../programs/unlock/init.pmdl");
const UNLOCK_INIT_STOCH: &str = include_str!("../../programs/unlock/init_stoch.pmdl");
const UNLOCK_REWARD: &str = include_str!("../../programs/unlock/reward.pmdl");

const D_IGNORED_WALLS: &str = include_str!("../../programs/defects/ignored_walls_transition.pmdl");
const D_MISSING_DIR: &str = include_str!("../../programs/defects/missing_dir_observe.pmdl");
const D_MISSING_CARRY: &str = include_str!("../../programs/defects/missing_carry_observe.pmdl");
const D_WRONG_REWARD: &str = include_str!("../../programs/defects/wrong_reward_reward.pmdl");
const D_LAVA_IGNORED_LAVA: &str = include_str!("../../programs/defects/lava_ignored_lava_init.pmdl");
const D_EMPTY_WRONG_INIT: &str = include_str!("../../programs/defects/empty_wrong_init.pmdl");
const D_CORNERS_WRONG_INIT: &str = include_str!("../../programs/defects/corners_wrong_init.pmdl");
const D_LAVA_WRONG_INIT: &str = include_str!("../../programs/defects/lava_wrong_init.pmdl");
const D_FOURROOMS_WRONG_INIT: &str = include_str!("../../programs/defects/fourrooms_wrong_init.pmdl");
const D_UNLOCK_WRONG_INIT: &str = include_str!("../../programs/defects/unlock_wrong_init.pmdl");

/// Source texts of one four-component model.
#[derive(Debug, Clone, Copy)]
pub struct ModelSources {
    pub initial: &'static str,
    pub transition: &'static str,
    pub observation: &'static str,
    pub reward: &'static str,
}

impl ModelSources {
    pub fn parse(&self) -> ModelPrograms {
        ModelPrograms::from_sources(self.initial, self.transition, self.observation, self.reward)
            .expect("shipped program corpus parses")
    }
}

fn family_init_reward(env: EnvId) -> (&'static str, &'static str) {
    match env {
        EnvId::Empty6 => (EMPTY_INIT, EMPTY_REWARD),
        EnvId::Corners10 => (CORNERS_INIT, CORNERS_REWARD),
        EnvId::Lava10 => (LAVA_INIT, LAVA_REWARD),
        EnvId::Lava10Stoch => (LAVA_INIT_STOCH, LAVA_REWARD),
        EnvId::FourRooms19 => (FOURROOMS_INIT, FOURROOMS_REWARD),
        EnvId::Unlock11 => (UNLOCK_INIT, UNLOCK_REWARD),
        EnvId::Unlock11Stoch => (UNLOCK_INIT_STOCH, UNLOCK_REWARD),
    }
}

/// Ground-truth model sources for an environment.
pub fn ground_truth_sources(env: EnvId) -> ModelSources {
    let (initial, reward) = family_init_reward(env);
    ModelSources { initial, transition: COMMON_TRANSITION, observation: COMMON_OBSERVE, reward }
}

/// Parsed ground-truth model.
pub fn ground_truth(env: EnvId) -> ModelPrograms {
    ground_truth_sources(env).parse()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DefectClass {
    WrongReward,
    IgnoredWalls,
    IgnoredLava,
    MissingCarry,
    MissingDir,
    WrongInit,
}

impl DefectClass {
    pub fn name(self) -> &'static str {
        match self {
            DefectClass::WrongReward => "wrong-reward",
            DefectClass::IgnoredWalls => "ignored-walls",
            DefectClass::IgnoredLava => "ignored-lava",
            DefectClass::MissingCarry => "missing-carry",
            DefectClass::MissingDir => "missing-dir",
            DefectClass::WrongInit => "wrong-init",
        }
    }
}

/// The defect classes stocked for an environment family. Classes that the
/// family's dynamics cannot exercise (no lava, no carriable object) are not
/// stocked. Every family carries at least four.
pub fn defect_classes(env: EnvId) -> Vec<DefectClass> {
    use DefectClass::*;
    let mut classes = vec![WrongReward, IgnoredWalls, MissingDir, WrongInit];
    match env.family() {
        "lava" => classes.insert(2, IgnoredLava),
        "unlock" => classes.insert(2, MissingCarry),
        _ => {}
    }
    classes
}

/// Ground truth with exactly one component replaced by the defect.
pub fn defect_sources(env: EnvId, class: DefectClass) -> ModelSources {
    let mut m = ground_truth_sources(env);
    match class {
        DefectClass::WrongReward => m.reward = D_WRONG_REWARD,
        DefectClass::IgnoredWalls => m.transition = D_IGNORED_WALLS,
        DefectClass::IgnoredLava => m.initial = D_LAVA_IGNORED_LAVA,
        DefectClass::MissingCarry => m.observation = D_MISSING_CARRY,
        DefectClass::MissingDir => m.observation = D_MISSING_DIR,
        DefectClass::WrongInit => {
            m.initial = match env.family() {
                "empty" => D_EMPTY_WRONG_INIT,
                "corners" => D_CORNERS_WRONG_INIT,
                "lava" => D_LAVA_WRONG_INIT,
                "fourrooms" => D_FOURROOMS_WRONG_INIT,
                "unlock" => D_UNLOCK_WRONG_INIT,
                other => unreachable!("unknown family {other}"),
            }
        }
    }
    m
}
