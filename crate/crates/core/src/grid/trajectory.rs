//! State-free trajectory records and JSONL persistence.
//!
//! A trajectory is (o0, a0, r1, d1, o1, ..., a_{H-1}, r_H, d_H, o_H): a
//! leading observation followed by per-step (action, reward, done, obs)
//! tuples. It never contains latent-state values. Privileged state logs for
//! the tabular baseline live in a separate file with its own schema.

use super::{Cell, Direction, GridError, GridLayout, GridState, Observation};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub const TRAJECTORY_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Failure,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajStep {
    pub action: u8,
    pub reward: f64,
    pub done: bool,
    pub obs: ObsRecord,
}

/// Integer-encoded observation as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObsRecord {
    pub g: Vec<u8>,
    pub dir: u8,
    pub carry: u8,
}

impl From<&Observation> for ObsRecord {
    fn from(o: &Observation) -> ObsRecord {
        ObsRecord { g: o.grid_codes().to_vec(), dir: o.dir as u8, carry: o.carry_code() }
    }
}

impl ObsRecord {
    pub fn decode(&self) -> Result<Observation, GridError> {
        if self.g.len() != 9 {
            return Err(GridError::Format(format!("observation grid has {} cells", self.g.len())));
        }
        let mut grid = [Cell::Unseen; 9];
        for (slot, &code) in grid.iter_mut().zip(self.g.iter()) {
            *slot = Cell::from_code(code)
                .ok_or_else(|| GridError::Format(format!("bad cell code {code}")))?;
        }
        let carry = match self.carry {
            0 => None,
            c => match Cell::from_code(c) {
                Some(Cell::Key(color)) => Some(color),
                _ => return Err(GridError::Format(format!("bad carry code {c}"))),
            },
        };
        Ok(Observation { grid, dir: Direction::from_index(self.dir), carry })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub version: u32,
    pub env_id: String,
    pub episode_seed: u64,
    pub outcome: Outcome,
    pub first_obs: ObsRecord,
    pub steps: Vec<TrajStep>,
}

impl Trajectory {
    pub fn new(
        env_id: &str,
        episode_seed: u64,
        outcome: Outcome,
        first_obs: &Observation,
        steps: Vec<TrajStep>,
    ) -> Trajectory {
        Trajectory {
            version: TRAJECTORY_FORMAT_VERSION,
            env_id: env_id.to_string(),
            episode_seed,
            outcome,
            first_obs: first_obs.into(),
            steps,
        }
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    /// Observation at time t (t = 0 is the leading observation).
    pub fn obs_at(&self, t: usize) -> Result<Observation, GridError> {
        if t == 0 {
            self.first_obs.decode()
        } else {
            self.steps[t - 1].obs.decode()
        }
    }

    /// Total realized reward.
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    fn validate(&self) -> Result<(), GridError> {
        if self.version != TRAJECTORY_FORMAT_VERSION {
            return Err(GridError::Format(format!("unsupported trajectory version {}", self.version)));
        }
        let done_positions: Vec<usize> =
            self.steps.iter().enumerate().filter(|(_, s)| s.done).map(|(i, _)| i).collect();
        match self.outcome {
            Outcome::Timeout => {
                if !done_positions.is_empty() {
                    return Err(GridError::Format("timeout trajectory with done flag".into()));
                }
            }
            _ => {
                if done_positions != [self.steps.len() - 1] {
                    return Err(GridError::Format(
                        "terminal flag must be set exactly once, at the final step".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Writes one episode per line.
pub fn write_trajectories(path: &Path, trajectories: &[Trajectory]) -> Result<(), GridError> {
    let mut w = BufWriter::new(File::create(path)?);
    for t in trajectories {
        t.validate()?;
        serde_json::to_writer(&mut w, t).map_err(|e| GridError::Format(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectories(path: &Path) -> Result<Vec<Trajectory>, GridError> {
    let r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t: Trajectory =
            serde_json::from_str(&line).map_err(|e| GridError::Format(e.to_string()))?;
        t.validate()?;
        out.push(t);
    }
    Ok(out)
}

/// Privileged per-episode latent-state log (for the tabular baseline and
/// evaluation diagnostics only). Also serves as the thread-safe snapshot of
/// a model latent state in traces and table keys.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateRecord {
    pub w: u32,
    pub h: u32,
    pub grid: Vec<u8>,
    pub x: i32,
    pub y: i32,
    pub dir: u8,
    pub carry: u8,
    pub step: u32,
}

impl From<&GridState> for StateRecord {
    fn from(s: &GridState) -> StateRecord {
        StateRecord {
            w: s.layout.width,
            h: s.layout.height,
            grid: s.layout.cells.iter().map(|c| c.code()).collect(),
            x: s.agent_pos.0,
            y: s.agent_pos.1,
            dir: s.agent_dir as u8,
            carry: s.carrying.map_or(0, |c| Cell::Key(c).code()),
            step: s.step_count,
        }
    }
}

impl StateRecord {
    pub fn decode(&self, max_steps: u32) -> Result<GridState, GridError> {
        let cells: Option<Vec<Cell>> = self.grid.iter().map(|&c| Cell::from_code(c)).collect();
        let cells = cells.ok_or_else(|| GridError::Format("bad cell code in state log".into()))?;
        if cells.len() != (self.w * self.h) as usize {
            return Err(GridError::Format("state grid size mismatch".into()));
        }
        let carrying = match self.carry {
            0 => None,
            c => match Cell::from_code(c) {
                Some(Cell::Key(color)) => Some(color),
                _ => return Err(GridError::Format("bad carry code in state log".into())),
            },
        };
        Ok(GridState {
            layout: GridLayout { width: self.w, height: self.h, cells },
            agent_pos: (self.x, self.y),
            agent_dir: Direction::from_index(self.dir),
            carrying,
            step_count: self.step,
            max_steps,
            terminated: false,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateLogLine {
    pub version: u32,
    pub env_id: String,
    pub episode_seed: u64,
    pub states: Vec<StateRecord>,
    pub actions: Vec<u8>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
}

pub fn write_state_log(path: &Path, lines: &[StateLogLine]) -> Result<(), GridError> {
    let mut w = BufWriter::new(File::create(path)?);
    for l in lines {
        serde_json::to_writer(&mut w, l).map_err(|e| GridError::Format(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_state_log(path: &Path) -> Result<Vec<StateLogLine>, GridError> {
    let r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| GridError::Format(e.to_string()))?);
    }
    Ok(out)
}

/// Scrambles every latent state in a log deterministically. Used by the
/// privileged-information firewall check: induction-path outputs must be
/// unchanged when the state log is garbage.
pub fn poison_states(states: &[GridState], seed: u64) -> Vec<GridState> {
    states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mix = crate::rng::mix(seed, &[i as u64]);
            let mut p = s.clone();
            p.agent_pos = ((mix % 97) as i32, ((mix >> 8) % 89) as i32);
            p.agent_dir = Direction::from_index((mix >> 16) as u8);
            p.step_count = (mix >> 24) as u32 & 0xffff;
            for cell in p.layout.cells.iter_mut() {
                *cell = if (mix >> 32) & 1 == 0 { Cell::Lava } else { Cell::Wall };
            }
            p
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::{emit, reset, step, Action, EnvId};
    use super::*;
    use crate::rng::{self, tag};
    use rand::Rng;

    fn random_episode(env: EnvId, seed: u64) -> (Trajectory, Vec<GridState>) {
        let mut rng = rng::derive(seed, &[tag::COLLECT]);
        let (mut state, obs0) = reset(env, seed);
        let mut states = vec![state.clone()];
        let mut steps = Vec::new();
        let mut outcome = Outcome::Timeout;
        for _ in 0..40 {
            let actions = env.actions();
            let a = actions[rng.gen_range(0..actions.len())];
            let (next, obs, reward, done) = step(&state, a).unwrap();
            steps.push(TrajStep { action: a as u8, reward, done, obs: (&obs).into() });
            states.push(next.clone());
            state = next;
            if done {
                outcome = if reward > 0.0 { Outcome::Success } else { Outcome::Failure };
                break;
            }
            if state.step_count >= state.max_steps {
                break;
            }
        }
        (Trajectory::new(env.name(), seed, outcome, &obs0, steps), states)
    }

    #[test]
    fn jsonl_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let trajs: Vec<Trajectory> =
            (0..4).map(|s| random_episode(EnvId::Corners10, s).0).collect();
        write_trajectories(&path, &trajs).unwrap();
        let back = read_trajectories(&path).unwrap();
        assert_eq!(trajs, back);
    }

    #[test]
    fn version_field_is_mandatory() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"env_id\":\"empty-6x6\"}\n").unwrap();
        assert!(read_trajectories(&path).is_err());
    }

    #[test]
    fn replay_reproduces_recorded_sequences() {
        // Replaying the recorded actions from the recorded seed must
        // reproduce observations and rewards bit-exactly.
        for env in [EnvId::Corners10, EnvId::Unlock11, EnvId::Lava10Stoch] {
            let (traj, _) = random_episode(env, 11);
            let (mut state, obs0) = reset(env, traj.episode_seed);
            assert_eq!(ObsRecord::from(&obs0), traj.first_obs);
            for st in &traj.steps {
                let a = Action::from_index(st.action).unwrap();
                let (next, obs, reward, done) = step(&state, a).unwrap();
                assert_eq!(ObsRecord::from(&obs), st.obs);
                assert_eq!(reward, st.reward);
                assert_eq!(done, st.done);
                state = next;
            }
        }
    }

    #[test]
    fn trajectory_contains_no_latent_state() {
        let (traj, _) = random_episode(EnvId::Unlock11, 3);
        let json = serde_json::to_string(&traj).unwrap();
        for field in ["agent_pos", "layout", "step_count", "states", "\"x\":", "\"y\":"] {
            assert!(!json.contains(field), "latent field `{field}` leaked into trajectory");
        }
    }

    #[test]
    fn emit_equals_state_function_along_episode() {
        let (traj, states) = random_episode(EnvId::Lava10, 5);
        for (t, s) in states.iter().enumerate() {
            let got = ObsRecord::from(&emit(s));
            let want = traj.obs_at(t).map(|o| ObsRecord::from(&o)).unwrap();
            assert_eq!(got, want);
        }
    }
}
