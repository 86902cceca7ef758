//! Partially observable gridworld environments.
//!
//! Five MiniGrid-style tasks (Empty, Corners, Lava, FourRooms, Unlock) plus
//! stochastic Lava/Unlock variants. States are value-semantic; `reset` and
//! `step` are pure functions so episodes can run in parallel and replays are
//! bit-exact.

mod env;
mod render;
mod trajectory;

pub use env::{emit, reset, step, EnvId, Method};
pub use render::render_episode;
pub use trajectory::{
    poison_states, read_state_log, read_trajectories, write_state_log, write_trajectories,
    ObsRecord, Outcome, StateLogLine, StateRecord, TrajStep, Trajectory, TRAJECTORY_FORMAT_VERSION,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("unknown environment id `{0}`")]
    UnknownEnv(String),
    #[error("episode already terminated")]
    Terminated,
    #[error("episode horizon ({0}) exhausted")]
    HorizonExhausted(u32),
    #[error("state log length {states} does not match trajectory length {expected}")]
    LengthMismatch { states: usize, expected: usize },
    #[error("trajectory format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Object colors, MiniGrid's six.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Color {
    Red = 0,
    Green = 1,
    Blue = 2,
    Purple = 3,
    Yellow = 4,
    Grey = 5,
}

impl Color {
    pub fn from_index(i: u8) -> Option<Color> {
        use Color::*;
        [Red, Green, Blue, Purple, Yellow, Grey].get(i as usize).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum DoorState {
    Open = 0,
    Closed = 1,
    Locked = 2,
}

/// One grid cell. `Unseen` is the sentinel for out-of-view cells in
/// observations; layouts never contain it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Cell {
    Unseen,
    Floor,
    Wall,
    Lava,
    Goal,
    Key(Color),
    Door(Color, DoorState),
}

impl Cell {
    /// Stable integer encoding used in trajectory files and the model DSL.
    /// 0 unseen, 1 floor, 2 wall, 3 lava, 4 goal, 5+c key, 11+3c+s door.
    pub fn code(self) -> u8 {
        match self {
            Cell::Unseen => 0,
            Cell::Floor => 1,
            Cell::Wall => 2,
            Cell::Lava => 3,
            Cell::Goal => 4,
            Cell::Key(c) => 5 + c as u8,
            Cell::Door(c, s) => 11 + 3 * c as u8 + s as u8,
        }
    }

    pub fn from_code(code: u8) -> Option<Cell> {
        match code {
            0 => Some(Cell::Unseen),
            1 => Some(Cell::Floor),
            2 => Some(Cell::Wall),
            3 => Some(Cell::Lava),
            4 => Some(Cell::Goal),
            5..=10 => Color::from_index(code - 5).map(Cell::Key),
            11..=28 => {
                let c = Color::from_index((code - 11) / 3)?;
                let s = match (code - 11) % 3 {
                    0 => DoorState::Open,
                    1 => DoorState::Closed,
                    _ => DoorState::Locked,
                };
                Some(Cell::Door(c, s))
            }
            _ => None,
        }
    }

    /// Cells the agent may move onto (entering lava/goal terminates).
    pub fn walkable(self) -> bool {
        matches!(
            self,
            Cell::Floor | Cell::Goal | Cell::Lava | Cell::Door(_, DoorState::Open)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Direction {
    North = 0,
    East = 1,
    South = 2,
    West = 3,
}

impl Direction {
    pub fn from_index(i: u8) -> Direction {
        match i % 4 {
            0 => Direction::North,
            1 => Direction::East,
            2 => Direction::South,
            _ => Direction::West,
        }
    }

    /// Unit step, y growing downward.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::North => (0, -1),
            Direction::East => (1, 0),
            Direction::South => (0, 1),
            Direction::West => (-1, 0),
        }
    }

    pub fn turn_right(self) -> Direction {
        Direction::from_index(self as u8 + 1)
    }

    pub fn turn_left(self) -> Direction {
        Direction::from_index(self as u8 + 3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Action {
    TurnLeft = 0,
    TurnRight = 1,
    Forward = 2,
    Pickup = 3,
    Drop = 4,
    Toggle = 5,
}

impl Action {
    pub fn from_index(i: u8) -> Option<Action> {
        use Action::*;
        [TurnLeft, TurnRight, Forward, Pickup, Drop, Toggle].get(i as usize).copied()
    }
}

/// Fixed per-episode world layout.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridLayout {
    pub width: u32,
    pub height: u32,
    pub cells: Vec<Cell>,
}

impl GridLayout {
    pub fn filled(width: u32, height: u32) -> GridLayout {
        let mut cells = vec![Cell::Floor; (width * height) as usize];
        for y in 0..height {
            for x in 0..width {
                if x == 0 || y == 0 || x == width - 1 || y == height - 1 {
                    cells[(y * width + x) as usize] = Cell::Wall;
                }
            }
        }
        GridLayout { width, height, cells }
    }

    pub fn in_bounds(&self, x: i32, y: i32) -> bool {
        x >= 0 && y >= 0 && (x as u32) < self.width && (y as u32) < self.height
    }

    pub fn get(&self, x: i32, y: i32) -> Cell {
        debug_assert!(self.in_bounds(x, y));
        self.cells[(y as u32 * self.width + x as u32) as usize]
    }

    pub fn set(&mut self, x: i32, y: i32, cell: Cell) {
        debug_assert!(self.in_bounds(x, y));
        self.cells[(y as u32 * self.width + x as u32) as usize] = cell;
    }
}

/// Full latent environment state. Never exposed to the induction pipeline;
/// observations go through [`emit`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridState {
    pub layout: GridLayout,
    pub agent_pos: (i32, i32),
    pub agent_dir: Direction,
    pub carrying: Option<Color>,
    pub step_count: u32,
    pub max_steps: u32,
    pub terminated: bool,
}

/// What the agent sees: a 3x3 egocentric window, its compass direction, and
/// the carried-object tag. Window rows run far-to-near; the agent occupies
/// index 7 (bottom center), the cell straight ahead index 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Observation {
    pub grid: [Cell; 9],
    pub dir: Direction,
    pub carry: Option<Color>,
}

impl Observation {
    /// Integer encoding of the window, row-major.
    pub fn grid_codes(&self) -> [u8; 9] {
        let mut out = [0u8; 9];
        for (o, c) in out.iter_mut().zip(self.grid.iter()) {
            *o = c.code();
        }
        out
    }

    pub fn carry_code(&self) -> u8 {
        self.carry.map_or(0, |c| Cell::Key(c).code())
    }
}
