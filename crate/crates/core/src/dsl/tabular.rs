//! Frequency-table baseline components.
//!
//! Each POMDP component is a lookup table of integer counts fit from
//! privileged state-annotated trajectories. States are keyed with the step
//! counter zeroed so revisiting a configuration at a different time hits the
//! same cell; sampled successors get the query's step plus one. Unseen
//! conditions fall back to a silent default: self-transition, zero reward,
//! not done, all-unseen observation.
//!
//! The component interface is deterministic for observation and reward
//! programs, so the observation table returns its modal entry (count
//! tie-break: smallest key) and termination fires when the empirical
//! termination rate reaches one half, rather than Bernoulli sampling.

use super::interp::EvalError;
use super::parse::ComponentKind;
use super::value::{record_to_value, value_to_record, GridVal, ObsVal, StateVal, Value};
use crate::grid::{StateLogLine, StateRecord};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::rc::Rc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TabularError {
    #[error("tabular fit requires a nonempty state-annotated dataset")]
    EmptyDataset,
    #[error("state log line malformed: {0}")]
    Malformed(String),
}

/// Observation snapshot used as a table value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObsEntry {
    pub g: [u8; 9],
    pub dir: u8,
    pub carry: u8,
}

fn keyed(mut r: StateRecord) -> StateRecord {
    r.step = 0;
    r
}

#[derive(Debug, Clone, Default)]
pub struct Tables {
    /// Initial states with occurrence counts; denominator = episode count.
    pub initial: BTreeMap<StateRecord, u32>,
    pub episodes: u32,
    /// (s, a) -> successor counts.
    pub transition: BTreeMap<(StateRecord, u8), BTreeMap<StateRecord, u32>>,
    /// (s, a, s') -> (reward sum, done count, total).
    pub reward: BTreeMap<(StateRecord, u8, StateRecord), (f64, u32, u32)>,
    /// (s', a) -> observation counts.
    pub observation: BTreeMap<(StateRecord, u8), BTreeMap<ObsEntry, u32>>,
}

/// One fitted component backed by the shared tables.
#[derive(Debug, Clone)]
pub struct TableComponent {
    kind: ComponentKind,
    tables: Rc_<Tables>,
}

// Tables are shared across the four components; Arc keeps the model Send.
type Rc_<T> = std::sync::Arc<T>;

impl TableComponent {
    pub fn kind(&self) -> ComponentKind {
        self.kind
    }

    pub fn samples(&self) -> bool {
        matches!(self.kind, ComponentKind::Initial | ComponentKind::Transition)
    }

    pub fn tables(&self) -> &Tables {
        &self.tables
    }

    pub fn describe(&self) -> String {
        let t = &self.tables;
        format!(
            "(tabular {} : {} episodes, {} transition conditions, {} reward cells, {} observation conditions)",
            self.kind.name(),
            t.episodes,
            t.transition.len(),
            t.reward.len(),
            t.observation.len()
        )
    }

    pub fn eval(&self, args: &[Value], rng: Option<&mut ChaCha8Rng>) -> Result<Value, EvalError> {
        match self.kind {
            ComponentKind::Initial => {
                let rng = rng.ok_or_else(|| EvalError::Sample("no rng stream attached".into()))?;
                let total = self.tables.episodes as f64;
                let u: f64 = rng.gen::<f64>() * total;
                let mut acc = 0.0;
                let mut chosen = None;
                for (state, count) in &self.tables.initial {
                    acc += *count as f64;
                    chosen = Some(state);
                    if u < acc {
                        break;
                    }
                }
                let state = chosen.expect("nonempty initial table");
                Ok(record_to_value(state))
            }
            ComponentKind::Transition => {
                let rng = rng.ok_or_else(|| EvalError::Sample("no rng stream attached".into()))?;
                let state = expect_state(&args[0])?;
                let action = expect_action(&args[1])?;
                let key = (keyed(state.clone()), action);
                match self.tables.transition.get(&key) {
                    None => Ok(bump_step(&args[0])),
                    Some(counts) => {
                        let total: u32 = counts.values().sum();
                        let u: f64 = rng.gen::<f64>() * total as f64;
                        let mut acc = 0.0;
                        let mut chosen = None;
                        for (next, count) in counts {
                            acc += *count as f64;
                            chosen = Some(next);
                            if u < acc {
                                break;
                            }
                        }
                        let mut next = chosen.expect("nonempty successor table").clone();
                        next.step = state.step + 1;
                        Ok(record_to_value(&next))
                    }
                }
            }
            ComponentKind::Observation => {
                let state = expect_state(&args[0])?;
                let action = expect_action(&args[1])?;
                let key = (keyed(state.clone()), action);
                let entry = self.tables.observation.get(&key).map(|counts| {
                    counts
                        .iter()
                        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                        .map(|(obs, _)| obs.clone())
                        .expect("nonempty observation table")
                });
                let (g, dir, carry) = match entry {
                    Some(o) => (o.g, o.dir as i64, o.carry as i64),
                    // Silent default: all-unseen window, state's dir/carry.
                    None => ([0u8; 9], state.dir as i64, state.carry as i64),
                };
                Ok(Value::Obs(Rc::new(ObsVal {
                    grid: Rc::new(GridVal { width: 3, height: 3, cells: g.to_vec() }),
                    dir,
                    carry,
                })))
            }
            ComponentKind::Reward => {
                let state = expect_state(&args[0])?;
                let action = expect_action(&args[1])?;
                let next = expect_state(&args[2])?;
                let key = (keyed(state.clone()), action, keyed(next.clone()));
                let (r, done) = match self.tables.reward.get(&key) {
                    None => (0.0, false),
                    Some((sum, dones, total)) => {
                        (*sum / *total as f64, (*dones as f64 / *total as f64) >= 0.5)
                    }
                };
                Ok(Value::Pair(Rc::new((Value::Float(r), Value::Bool(done)))))
            }
        }
    }
}

fn expect_state(v: &Value) -> Result<StateRecord, EvalError> {
    value_to_record(v).ok_or_else(|| EvalError::Type(format!("expected state, got {}", v.type_name())))
}

fn expect_action(v: &Value) -> Result<u8, EvalError> {
    match v {
        Value::Int(a) if (0..=5).contains(a) => Ok(*a as u8),
        other => Err(EvalError::Type(format!("expected action 0..5, got {other:?}"))),
    }
}

fn bump_step(state: &Value) -> Value {
    let Value::State(s) = state else { unreachable!() };
    Value::State(Rc::new(StateVal {
        grid: s.grid.clone(),
        x: s.x,
        y: s.y,
        dir: s.dir,
        carry: s.carry,
        step: s.step + 1,
    }))
}

/// Fits the four frequency tables from privileged episode logs and wraps
/// them as a four-component model.
pub fn tabular_fit(dataset: &[StateLogLine]) -> Result<super::ModelPrograms, TabularError> {
    if dataset.is_empty() {
        return Err(TabularError::EmptyDataset);
    }
    let mut tables = Tables { episodes: dataset.len() as u32, ..Tables::default() };
    for line in dataset {
        let n = line.actions.len();
        if line.states.len() != n + 1 || line.rewards.len() != n || line.dones.len() != n {
            return Err(TabularError::Malformed(format!(
                "episode {}: {} states for {} actions",
                line.episode_seed,
                line.states.len(),
                n
            )));
        }
        let first = keyed(line.states[0].clone());
        *tables.initial.entry(first).or_insert(0) += 1;
        for t in 0..n {
            let s = keyed(line.states[t].clone());
            let sn = keyed(line.states[t + 1].clone());
            let a = line.actions[t];
            *tables
                .transition
                .entry((s.clone(), a))
                .or_default()
                .entry(sn.clone())
                .or_insert(0) += 1;
            let cell = tables.reward.entry((s.clone(), a, sn.clone())).or_insert((0.0, 0, 0));
            cell.0 += line.rewards[t];
            cell.1 += line.dones[t] as u32;
            cell.2 += 1;
            // Observation model conditions on the arrival state and action.
            let obs = observe_record(&line.states[t + 1]);
            *tables.observation.entry((sn, a)).or_default().entry(obs).or_insert(0) += 1;
        }
    }
    let shared = Rc_::new(tables);
    let component = |kind| {
        super::ComponentProgram::from_table(TableComponent { kind, tables: shared.clone() })
    };
    Ok(super::ModelPrograms {
        initial: component(ComponentKind::Initial),
        transition: component(ComponentKind::Transition),
        observation: component(ComponentKind::Observation),
        reward: component(ComponentKind::Reward),
    })
}

/// Recorded observation for a logged latent state (the simulator's emit,
/// recomputed from the record).
fn observe_record(s: &StateRecord) -> ObsEntry {
    let state = s.decode(u32::MAX).expect("state record decodes");
    let obs = crate::grid::emit(&state);
    ObsEntry { g: obs.grid_codes(), dir: obs.dir as u8, carry: obs.carry_code() }
}
