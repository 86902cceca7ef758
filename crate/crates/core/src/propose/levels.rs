//! Natural-language environment descriptions at four information levels.
//! L0 supplies nothing; L3 is the full text used for headline runs.

use crate::grid::EnvId;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(try_from = "String", into = "String")]
pub enum PromptLevel {
    L0,
    L1,
    L2,
    #[default]
    L3,
}

impl FromStr for PromptLevel {
    type Err = String;
    fn from_str(s: &str) -> Result<PromptLevel, String> {
        match s {
            "L0" | "l0" => Ok(PromptLevel::L0),
            "L1" | "l1" => Ok(PromptLevel::L1),
            "L2" | "l2" => Ok(PromptLevel::L2),
            "L3" | "l3" => Ok(PromptLevel::L3),
            other => Err(format!("unknown prompt level `{other}` (expected L0..L3)")),
        }
    }
}

impl TryFrom<String> for PromptLevel {
    type Error = String;
    fn try_from(s: String) -> Result<PromptLevel, String> {
        s.parse()
    }
}

impl From<PromptLevel> for String {
    fn from(l: PromptLevel) -> String {
        l.name().to_string()
    }
}

impl PromptLevel {
    pub fn name(self) -> &'static str {
        match self {
            PromptLevel::L0 => "L0",
            PromptLevel::L1 => "L1",
            PromptLevel::L2 => "L2",
            PromptLevel::L3 => "L3",
        }
    }
}

/// The environment description at the given level; `None` at L0.
pub fn description(env: EnvId, level: PromptLevel) -> Option<&'static str> {
    use EnvId::*;
    use PromptLevel::*;
    let text = match (env.family(), level) {
        (_, L0) => return None,

        ("empty", L1) => "6x6 grid.",
        ("empty", L2) => "6x6 grid with boundary walls. Goal is in a corner. Agent starts at an interior position.",
        ("empty", L3) => "6x6 grid with boundary walls. Goal is at the bottom-right interior corner. Agent starts at the top-left interior cell facing east. The layout is identical in every episode.",

        ("corners", L1) => "10x10 grid.",
        ("corners", L2) => "10x10 grid with boundary walls. Goal is in a corner of the grid. Agent starts at an interior position.",
        ("corners", L3) => "10x10 grid with boundary walls. Goal is placed in a random corner of the grid. Agent starts at a random interior position with random direction. No obstacles. Both agent start and goal corner vary between episodes.",

        ("lava", L1) => "10x10 grid with lava.",
        ("lava", L2) => "10x10 grid with boundary walls. A vertical wall of lava with one passable gap. Agent starts at (1,1). Goal is at the bottom-right corner.",
        ("lava", L3) => match env {
            Lava10Stoch => "10x10 grid with boundary walls. A vertical wall of lava spans most of one column with exactly one gap to pass through. The lava column position, gap position, agent start position and direction, and goal position all vary between episodes.",
            _ => "10x10 grid with boundary walls. A vertical wall of lava spans most of one column with exactly one gap to pass through. Agent starts at (1,1). Goal is at the bottom-right corner. The lava column position and gap position vary between episodes.",
        },

        ("fourrooms", L1) => "19x19 grid.",
        ("fourrooms", L2) => "19x19 grid divided into 4 rooms by internal walls, each connected by one doorway. Agent and goal are placed in different rooms.",
        ("fourrooms", L3) => "19x19 grid divided into 4 rooms by internal walls, each room connected by one doorway. Agent and goal are placed at random positions in different rooms. Room layout is fixed, but agent start position, direction, and goal position vary between episodes.",

        ("unlock", L1) => "Grid world with a locked door.",
        ("unlock", L2) => "Grid world with boundary walls and a locked door separating the map into two sections. A key is in the accessible section; the goal is behind the locked door.",
        ("unlock", L3) => match env {
            Unlock11Stoch => "Grid world with boundary walls and a locked door separating the map into two sections. A key is placed in the accessible section, and the goal is located behind the locked door. Agent start position and direction, key position, dividing-wall position, and goal position vary between episodes.",
            _ => "Grid world with boundary walls and a locked door separating the map into two sections. A key is placed in the accessible section, and the goal is located behind the locked door. Agent starts in the initial section with random position and direction. The room layout is fixed, while agent start position, key position, and goal position vary between episodes.",
        },

        _ => unreachable!("family/level covered above"),
    };
    Some(text)
}
