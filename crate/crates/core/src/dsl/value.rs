//! Runtime values for the model DSL.
//!
//! Model latent states share the simulator's state shape (grid, position,
//! direction, carry, step), which keeps belief diagnostics against the true
//! state well-defined. Values are cheap to clone (scalars inline, aggregates
//! behind `Rc`) and have total, deterministic equality/ordering so particle
//! grouping, vote tallies, and MAP tie-breaks are reproducible.

use crate::grid::{Cell, GridState, Observation};
use std::cmp::Ordering;
use std::hash::{Hash, Hasher};
use std::rc::Rc;

#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Grid(Rc<GridVal>),
    List(Rc<Vec<Value>>),
    Pair(Rc<(Value, Value)>),
    State(Rc<StateVal>),
    Obs(Rc<ObsVal>),
    /// Opaque token for the caller-owned random stream.
    Rng,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridVal {
    pub width: u32,
    pub height: u32,
    pub cells: Vec<u8>,
}

impl GridVal {
    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64
    }

    pub fn get(&self, x: i64, y: i64) -> u8 {
        self.cells[(y as u32 * self.width + x as u32) as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateVal {
    pub grid: Rc<GridVal>,
    pub x: i64,
    pub y: i64,
    pub dir: i64,
    pub carry: i64,
    pub step: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObsVal {
    pub grid: Rc<GridVal>,
    pub dir: i64,
    pub carry: i64,
}

impl ObsVal {
    /// Row-major 3x3 cell codes.
    pub fn codes(&self) -> [u8; 9] {
        let mut out = [0u8; 9];
        out.copy_from_slice(&self.grid.cells);
        out
    }
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Bool(_) => "bool",
            Value::Grid(_) => "grid",
            Value::List(_) => "list",
            Value::Pair(_) => "pair",
            Value::State(_) => "state",
            Value::Obs(_) => "obs",
            Value::Rng => "rng",
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Int(_) => 0,
            Value::Float(_) => 1,
            Value::Bool(_) => 2,
            Value::Grid(_) => 3,
            Value::List(_) => 4,
            Value::Pair(_) => 5,
            Value::State(_) => 6,
            Value::Obs(_) => 7,
            Value::Rng => 8,
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Grid(a), Value::Grid(b)) => Rc::ptr_eq(a, b) || a == b,
            (Value::List(a), Value::List(b)) => Rc::ptr_eq(a, b) || a == b,
            (Value::Pair(a), Value::Pair(b)) => Rc::ptr_eq(a, b) || a == b,
            (Value::State(a), Value::State(b)) => {
                Rc::ptr_eq(a, b)
                    || (a.x == b.x
                        && a.y == b.y
                        && a.dir == b.dir
                        && a.carry == b.carry
                        && a.step == b.step
                        && (Rc::ptr_eq(&a.grid, &b.grid) || a.grid == b.grid))
            }
            (Value::Obs(a), Value::Obs(b)) => Rc::ptr_eq(a, b) || a == b,
            (Value::Rng, Value::Rng) => true,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, h: &mut H) {
        h.write_u8(self.rank());
        match self {
            Value::Int(v) => v.hash(h),
            Value::Float(v) => v.to_bits().hash(h),
            Value::Bool(v) => v.hash(h),
            Value::Grid(g) => g.hash(h),
            Value::List(l) => l.hash(h),
            Value::Pair(p) => p.hash(h),
            Value::State(s) => s.hash(h),
            Value::Obs(o) => o.hash(h),
            Value::Rng => {}
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Value) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Value) -> Ordering {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Grid(a), Value::Grid(b)) => a.cmp(b),
            (Value::List(a), Value::List(b)) => a.cmp(b),
            (Value::Pair(a), Value::Pair(b)) => a.cmp(b),
            (Value::State(a), Value::State(b)) => a.cmp(b),
            (Value::Obs(a), Value::Obs(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

/// Lightweight observation view used by the distance kernel; both simulator
/// observations and DSL observation values reduce to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub struct ObsCodes {
    pub g: [u8; 9],
    pub dir: u8,
    pub carry: u8,
}

impl From<&Observation> for ObsCodes {
    fn from(o: &Observation) -> ObsCodes {
        ObsCodes { g: o.grid_codes(), dir: o.dir as u8, carry: o.carry_code() }
    }
}

impl From<&ObsVal> for ObsCodes {
    fn from(o: &ObsVal) -> ObsCodes {
        ObsCodes { g: o.codes(), dir: o.dir as u8, carry: o.carry as u8 }
    }
}

/// Latent simulator state as a model-DSL value (same schema the DSL's
/// `make-state` builds). Used only by evaluation diagnostics and oracles.
pub fn state_to_value(s: &GridState) -> Value {
    let grid = Rc::new(GridVal {
        width: s.layout.width,
        height: s.layout.height,
        cells: s.layout.cells.iter().map(|c| c.code()).collect(),
    });
    Value::State(Rc::new(StateVal {
        grid,
        x: s.agent_pos.0 as i64,
        y: s.agent_pos.1 as i64,
        dir: s.agent_dir as i64,
        carry: s.carrying.map_or(0, |c| Cell::Key(c).code()) as i64,
        step: s.step_count as i64,
    }))
}

/// Thread-safe snapshot of a model latent state (shared with the privileged
/// state-log schema). Traces, table keys, and anything that crosses a worker
/// boundary use this instead of `Value`.
pub fn value_to_record(v: &Value) -> Option<crate::grid::StateRecord> {
    let Value::State(s) = v else { return None };
    Some(crate::grid::StateRecord {
        w: s.grid.width,
        h: s.grid.height,
        grid: s.grid.cells.clone(),
        x: s.x as i32,
        y: s.y as i32,
        dir: s.dir as u8,
        carry: s.carry as u8,
        step: s.step.max(0) as u32,
    })
}

pub fn record_to_value(r: &crate::grid::StateRecord) -> Value {
    Value::State(Rc::new(StateVal {
        grid: Rc::new(GridVal { width: r.w, height: r.h, cells: r.grid.clone() }),
        x: r.x as i64,
        y: r.y as i64,
        dir: r.dir as i64,
        carry: r.carry as i64,
        step: r.step as i64,
    }))
}

/// Compact single-line rendering for prompts and traces. Observations only;
/// latent states are never rendered into prompt text.
pub fn render_obs_codes(o: &ObsCodes) -> String {
    let g: Vec<String> = o.g.iter().map(|c| c.to_string()).collect();
    format!("obs(grid={},dir={},carry={})", g.join(","), o.dir, o.carry)
}
