//! Offline dataset collection with a scripted demonstrator.
//!
//! Datasets mix successful episodes, deliberate failures (walking into
//! lava), wall-bumping detours, and timeouts, so candidate models see both
//! positive terminal events and zero-reward outcomes.

use crate::grid::{
    reset, step, Action, Cell, Direction, EnvId, GridError, GridState, Outcome, StateLogLine,
    StateRecord, TrajStep, Trajectory,
};
use crate::rng::{self, tag};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::{HashSet, VecDeque};
use std::path::Path;

/// Episode styles cycled over the dataset. `Failure` is environment
/// specific: a lava death where lava exists, otherwise a timeout wander.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Style {
    Direct,
    Detour,
    WallBump,
    Failure,
    Timeout,
}

const STYLE_CYCLE: [Style; 10] = [
    Style::Direct,
    Style::Detour,
    Style::Direct,
    Style::Failure,
    Style::WallBump,
    Style::Direct,
    Style::Detour,
    Style::Timeout,
    Style::Direct,
    Style::Direct,
];

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Pose {
    x: i32,
    y: i32,
    dir: Direction,
}

fn pose_of(s: &GridState) -> Pose {
    Pose { x: s.agent_pos.0, y: s.agent_pos.1, dir: s.agent_dir }
}

fn pose_step(layout: &crate::grid::GridLayout, p: Pose, a: Action) -> Pose {
    match a {
        Action::TurnLeft => Pose { dir: p.dir.turn_left(), ..p },
        Action::TurnRight => Pose { dir: p.dir.turn_right(), ..p },
        Action::Forward => {
            let (dx, dy) = p.dir.delta();
            let (nx, ny) = (p.x + dx, p.y + dy);
            if layout.in_bounds(nx, ny) && layout.get(nx, ny).walkable() && layout.get(nx, ny) != Cell::Lava
            {
                Pose { x: nx, y: ny, dir: p.dir }
            } else {
                p
            }
        }
        _ => p,
    }
}

/// Shortest turn/forward action sequence from the state's pose to any pose
/// satisfying `done` (lava never traversed en route).
fn bfs_plan(state: &GridState, done: impl Fn(&Pose) -> bool) -> Option<Vec<Action>> {
    let start = pose_of(state);
    if done(&start) {
        return Some(Vec::new());
    }
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([(start, Vec::new())]);
    while let Some((pose, path)) = queue.pop_front() {
        for a in [Action::Forward, Action::TurnLeft, Action::TurnRight] {
            let n = pose_step(&state.layout, pose, a);
            if n == pose {
                continue;
            }
            let mut next_path = path.clone();
            next_path.push(a);
            if done(&n) {
                return Some(next_path);
            }
            if seen.insert(n) {
                queue.push_back((n, next_path));
            }
        }
    }
    None
}

fn facing<'a>(
    pred: impl Fn(Cell) -> bool + Copy + 'a,
    layout: &'a crate::grid::GridLayout,
) -> impl Fn(&Pose) -> bool + 'a {
    move |p: &Pose| {
        let (dx, dy) = p.dir.delta();
        let (nx, ny) = (p.x + dx, p.y + dy);
        layout.in_bounds(nx, ny) && pred(layout.get(nx, ny))
    }
}

struct Recorder {
    state: GridState,
    steps: Vec<TrajStep>,
    states: Vec<GridState>,
    done_reward: Option<f64>,
}

impl Recorder {
    fn new(state: GridState) -> Recorder {
        Recorder { states: vec![state.clone()], state, steps: Vec::new(), done_reward: None }
    }

    fn exhausted(&self) -> bool {
        self.done_reward.is_some() || self.state.step_count >= self.state.max_steps
    }

    fn act(&mut self, action: Action) -> Result<(), GridError> {
        let (next, obs, reward, done) = step(&self.state, action)?;
        self.steps.push(TrajStep { action: action as u8, reward, done, obs: (&obs).into() });
        self.states.push(next.clone());
        self.state = next;
        if done {
            self.done_reward = Some(reward);
        }
        Ok(())
    }

    fn act_all(&mut self, actions: &[Action]) -> Result<(), GridError> {
        for &a in actions {
            if self.exhausted() {
                break;
            }
            self.act(a)?;
        }
        Ok(())
    }
}

/// Drives to the goal; `None` when unreachable (should not happen in the
/// shipped environments).
fn drive_to_goal(rec: &mut Recorder) -> Result<bool, GridError> {
    // Unlock: fetch the key and open the door first when needed.
    let needs_key = rec
        .state
        .layout
        .cells
        .iter()
        .any(|c| matches!(c, Cell::Door(_, crate::grid::DoorState::Locked)));
    if needs_key && rec.state.carrying.is_none() {
        let Some(path) = bfs_plan(&rec.state, facing(|c| matches!(c, Cell::Key(_)), &rec.state.layout))
        else {
            return Ok(false);
        };
        rec.act_all(&path)?;
        if rec.exhausted() {
            return Ok(false);
        }
        rec.act(Action::Pickup)?;
        let Some(path) = bfs_plan(&rec.state, facing(|c| matches!(c, Cell::Door(..)), &rec.state.layout))
        else {
            return Ok(false);
        };
        rec.act_all(&path)?;
        if rec.exhausted() {
            return Ok(false);
        }
        rec.act(Action::Toggle)?;
    }
    let Some(path) = bfs_plan(&rec.state, |p| rec.state.layout.get(p.x, p.y) == Cell::Goal) else {
        return Ok(false);
    };
    rec.act_all(&path)?;
    Ok(rec.done_reward.is_some())
}

fn random_legal(rec: &Recorder, rng: &mut ChaCha8Rng, env: EnvId) -> Action {
    // Navigation moves only, and never forward into lava (wanderers survive).
    loop {
        let a = match rng.gen_range(0..3u8) {
            0 => Action::TurnLeft,
            1 => Action::TurnRight,
            _ => Action::Forward,
        };
        if a == Action::Forward {
            let (dx, dy) = rec.state.agent_dir.delta();
            let (nx, ny) = (rec.state.agent_pos.0 + dx, rec.state.agent_pos.1 + dy);
            if rec.state.layout.in_bounds(nx, ny) && rec.state.layout.get(nx, ny) == Cell::Lava {
                continue;
            }
        }
        let _ = env;
        return a;
    }
}

/// One demonstrated episode in the given style.
fn demonstrate(env: EnvId, episode_seed: u64, style: Style, rng: &mut ChaCha8Rng) -> (Trajectory, StateLogLine) {
    let (state, obs0) = reset(env, episode_seed);
    let has_lava = state.layout.cells.contains(&Cell::Lava);
    let mut rec = Recorder::new(state);

    match style {
        Style::Direct => {
            let _ = drive_to_goal(&mut rec);
        }
        Style::Detour => {
            let len = rng.gen_range(3..10);
            for _ in 0..len {
                if rec.exhausted() {
                    break;
                }
                let a = random_legal(&rec, rng, env);
                let _ = rec.act(a);
            }
            let _ = drive_to_goal(&mut rec);
        }
        Style::WallBump => {
            // Face the nearest wall and push into it a few times, then go.
            if let Some(path) =
                bfs_plan(&rec.state, facing(|c| c == Cell::Wall, &rec.state.layout))
            {
                let _ = rec.act_all(&path);
            }
            for _ in 0..3 {
                if rec.exhausted() {
                    break;
                }
                let _ = rec.act(Action::Forward);
            }
            let _ = drive_to_goal(&mut rec);
        }
        Style::Failure if has_lava => {
            // Deliberate lava death: walk up to the wall of lava, step in.
            if let Some(path) = bfs_plan(&rec.state, facing(|c| c == Cell::Lava, &rec.state.layout))
            {
                let _ = rec.act_all(&path);
                if !rec.exhausted() {
                    let _ = rec.act(Action::Forward);
                }
            }
        }
        Style::Failure | Style::Timeout => {
            // Wander without ever entering goal or lava until the horizon.
            while !rec.exhausted() {
                let a = random_legal(&rec, rng, env);
                let (dx, dy) = rec.state.agent_dir.delta();
                let ahead = (rec.state.agent_pos.0 + dx, rec.state.agent_pos.1 + dy);
                let entering_goal = a == Action::Forward
                    && rec.state.layout.in_bounds(ahead.0, ahead.1)
                    && rec.state.layout.get(ahead.0, ahead.1) == Cell::Goal;
                let _ = rec.act(if entering_goal { Action::TurnLeft } else { a });
            }
        }
    }

    let outcome = match rec.done_reward {
        Some(r) if r > 0.0 => Outcome::Success,
        Some(_) => Outcome::Failure,
        None => Outcome::Timeout,
    };
    let trajectory = Trajectory::new(env.name(), episode_seed, outcome, &obs0, std::mem::take(&mut rec.steps));
    let log = StateLogLine {
        version: 1,
        env_id: env.name().to_string(),
        episode_seed,
        states: rec.states.iter().map(StateRecord::from).collect(),
        actions: trajectory.steps.iter().map(|s| s.action).collect(),
        rewards: trajectory.steps.iter().map(|s| s.reward).collect(),
        dones: trajectory.steps.iter().map(|s| s.done).collect(),
    };
    (trajectory, log)
}

/// Collects `n` demonstration episodes, deterministic under `seed`.
pub fn collect_demonstrations(env: EnvId, n: usize, seed: u64) -> (Vec<Trajectory>, Vec<StateLogLine>) {
    assert!(n >= 1, "dataset needs at least one trajectory");
    let mut trajectories = Vec::with_capacity(n);
    let mut logs = Vec::with_capacity(n);
    for i in 0..n {
        let style = STYLE_CYCLE[i % STYLE_CYCLE.len()];
        let episode_seed = rng::mix(seed, &[tag::COLLECT, i as u64]);
        let mut stream = rng::derive(seed, &[tag::COLLECT, i as u64, 1]);
        let (t, l) = demonstrate(env, episode_seed, style, &mut stream);
        trajectories.push(t);
        logs.push(l);
    }
    (trajectories, logs)
}

/// Writes the state-free dataset, plus the privileged state log when a
/// path for it is given.
pub fn collect_offline_dataset(
    env: EnvId,
    n: usize,
    seed: u64,
    out: &Path,
    states_out: Option<&Path>,
) -> Result<(), GridError> {
    let (trajectories, logs) = collect_demonstrations(env, n, seed);
    crate::grid::write_trajectories(out, &trajectories)?;
    if let Some(path) = states_out {
        crate::grid::write_state_log(path, &logs)?;
    }
    Ok(())
}
