//! Prompt assembly: task description, DSL/API reference, trajectory
//! excerpt, and (for refinement) parent feedback.

use super::levels::{description, PromptLevel};
use crate::dsl::{ModelScore, ObsCodes};
use crate::grid::{EnvId, Trajectory};
use crate::score::DisagreementContext;
use serde::{Deserialize, Serialize};

const DSL_REFERENCE: &str = include_str!("../../docs/dsl.md");
/// Rough token-proxy cap on the rendered prompt.
pub const DEFAULT_CHAR_BUDGET: usize = 60_000;
const MAX_EXCERPT_TRAJECTORIES: usize = 10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Feedback {
    pub parent_sources: [String; 4],
    pub score: ModelScore,
    pub diagnostics: String,
    pub qbc: Vec<DisagreementContext>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromptBundle {
    /// Natural-language environment description; absent at level L0.
    pub task_description: Option<String>,
    /// State/action/observation schema and DSL reference.
    pub api_description: String,
    pub dataset_excerpt: String,
    pub feedback: Option<Feedback>,
    pub char_budget: usize,
}

/// One upright base-36 symbol per window cell, so a 3x3 grid is 9 symbols.
fn grid_symbols(o: &ObsCodes) -> String {
    o.g.iter().map(|&c| char::from_digit(c as u32, 36).unwrap_or('?')).collect()
}

fn obs_line(o: &ObsCodes) -> String {
    format!("obs(grid={},dir={},carry={})", grid_symbols(o), o.dir, o.carry)
}

/// Compact per-step trajectory rendering. Latent states never appear here:
/// only observations, actions, rewards, and done flags.
fn format_trajectory(index: usize, t: &Trajectory) -> String {
    let mut out = format!("trajectory {index} (outcome={:?}, steps={}):\n", t.outcome, t.steps.len());
    let first = t.obs_at(0).map(|o| ObsCodes::from(&o));
    if let Ok(o) = first {
        out.push_str(&format!("  {}\n", obs_line(&o)));
    }
    for step in &t.steps {
        let o = match step.obs.decode() {
            Ok(o) => ObsCodes::from(&o),
            Err(_) => continue,
        };
        out.push_str(&format!(
            "  act={} r={:.4} done={} {}\n",
            step.action,
            step.reward,
            step.done,
            obs_line(&o)
        ));
    }
    out
}

fn dataset_excerpt(dataset: &[Trajectory]) -> String {
    dataset
        .iter()
        .take(MAX_EXCERPT_TRAJECTORIES)
        .enumerate()
        .map(|(i, t)| format_trajectory(i, t))
        .collect()
}

fn api_description(env: EnvId) -> String {
    let actions: Vec<String> =
        env.actions().iter().map(|a| format!("{}={}", format!("{a:?}").to_lowercase(), *a as u8)).collect();
    let (w, h) = env.size();
    format!(
        "The environment emits observations (3x3 window, direction, carry) and \
         accepts the actions [{}]. The world grid is {}x{}. Horizon: {} steps.\n\n\
         Write one model as four fenced code blocks, tagged exactly `initial`, \
         `transition`, `observation`, `reward`, each containing a complete DSL \
         program for that component.\n\n{}",
        actions.join(", "),
        w,
        h,
        env.max_steps(),
        DSL_REFERENCE
    )
}

/// Prompt for the first proposal round: task text at the given level, the
/// code API, and a formatted excerpt of the offline dataset.
pub fn build_initial_prompt(env: EnvId, level: PromptLevel, dataset: &[Trajectory]) -> PromptBundle {
    PromptBundle {
        task_description: description(env, level).map(str::to_string),
        api_description: api_description(env),
        dataset_excerpt: dataset_excerpt(dataset),
        feedback: None,
        char_budget: DEFAULT_CHAR_BUDGET,
    }
}

/// Prompt for refining a scored parent: adds its source, scalar score,
/// failure diagnostics, and committee-disagreement contexts.
pub fn build_refinement_prompt(
    env: EnvId,
    level: PromptLevel,
    dataset: &[Trajectory],
    parent_sources: [String; 4],
    score: ModelScore,
    diagnostics: String,
    qbc: Vec<DisagreementContext>,
) -> PromptBundle {
    PromptBundle {
        feedback: Some(Feedback { parent_sources, score, diagnostics, qbc }),
        ..build_initial_prompt(env, level, dataset)
    }
}

impl PromptBundle {
    /// Renders the full prompt text. When over budget the dataset excerpt
    /// is truncated first (whole lines from the end); feedback is never cut.
    pub fn render(&self) -> String {
        let mut fixed = String::new();
        if let Some(task) = &self.task_description {
            fixed.push_str("## Task\n\n");
            fixed.push_str(task);
            fixed.push_str("\n\n");
        }
        fixed.push_str("## Interface\n\n");
        fixed.push_str(&self.api_description);
        fixed.push_str("\n\n");

        let mut tail = String::new();
        if let Some(f) = &self.feedback {
            tail.push_str("## Previous candidate\n\n");
            for (kind, src) in ["initial", "transition", "observation", "reward"]
                .iter()
                .zip(&f.parent_sources)
            {
                tail.push_str(&format!("```{kind}\n{src}\n```\n"));
            }
            let score = match f.score {
                ModelScore::Valid(s) => format!("{s:.6}"),
                ModelScore::Invalid => "invalid (execution error)".to_string(),
                ModelScore::Pending => "unscored".to_string(),
            };
            tail.push_str(&format!("\nScore on the dataset: {score}\n\n"));
            tail.push_str("### Failure diagnostics\n\n");
            tail.push_str(&f.diagnostics);
            if !f.qbc.is_empty() {
                tail.push_str("\n### Dynamics contexts where candidate models disagree\n\n");
                for c in &f.qbc {
                    tail.push_str(&format!(
                        "- at {} action={} vote-entropy={:.3}\n",
                        obs_line(&c.observation),
                        c.action,
                        c.vote_entropy
                    ));
                }
            }
            tail.push_str("\nRevise the model to fix the failures above. Respond with the four fenced blocks.\n");
        } else {
            tail.push_str("Propose a world model for this environment. Respond with the four fenced blocks.\n");
        }

        let header = "## Recorded trajectories\n\n";
        let budget = self
            .char_budget
            .saturating_sub(fixed.len() + header.len() + tail.len());
        let mut excerpt = self.dataset_excerpt.clone();
        if excerpt.len() > budget {
            let mut cut = budget;
            while cut > 0 && !excerpt.is_char_boundary(cut) {
                cut -= 1;
            }
            excerpt.truncate(cut);
            if let Some(nl) = excerpt.rfind('\n') {
                excerpt.truncate(nl + 1);
            }
            excerpt.push_str("...excerpt truncated\n");
        }
        format!("{fixed}{header}{excerpt}\n{tail}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{emit, reset, step, Action, Outcome, TrajStep};

    fn tiny_dataset(env: EnvId, n: usize) -> Vec<Trajectory> {
        (0..n as u64)
            .map(|seed| {
                let (s, o0) = reset(env, seed);
                let (_, o1, r, d) = step(&s, Action::Forward).unwrap();
                Trajectory::new(
                    env.name(),
                    seed,
                    Outcome::Timeout,
                    &o0,
                    vec![TrajStep { action: 2, reward: r, done: d, obs: (&o1).into() }],
                )
            })
            .collect()
    }

    #[test]
    fn corners_l3_text_is_embedded() {
        let bundle = build_initial_prompt(EnvId::Corners10, PromptLevel::L3, &tiny_dataset(EnvId::Corners10, 2));
        let text = bundle.render();
        assert!(text.contains("10x10 grid with boundary walls. Goal is placed in a random corner"));
        assert!(text.contains("## Recorded trajectories"));
    }

    #[test]
    fn l0_has_no_task_section() {
        let bundle = build_initial_prompt(EnvId::Lava10, PromptLevel::L0, &tiny_dataset(EnvId::Lava10, 1));
        assert!(bundle.task_description.is_none());
        assert!(!bundle.render().contains("## Task"));
    }

    #[test]
    fn excerpt_truncates_before_feedback() {
        let env = EnvId::FourRooms19;
        let mut bundle = build_refinement_prompt(
            env,
            PromptLevel::L3,
            &tiny_dataset(env, 10),
            std::array::from_fn(|_| "(define (x) 1)".to_string()),
            ModelScore::Valid(-3.5),
            "reward mismatch: trajectory 0 step 4\n".to_string(),
            vec![],
        );
        bundle.char_budget = bundle.render().len() - 400;
        let text = bundle.render();
        assert!(text.len() <= bundle.char_budget + 50);
        assert!(text.contains("excerpt truncated"));
        assert!(text.contains("reward mismatch"), "feedback survives truncation");
        assert!(text.contains("-3.5"));
    }

    #[test]
    fn prompt_is_latent_state_free() {
        let env = EnvId::Unlock11;
        let bundle = build_initial_prompt(env, PromptLevel::L3, &tiny_dataset(env, 3));
        let text = bundle.render();
        // The schema may be described; realized latent values may not. The
        // trajectory section must contain only obs/act/r/done lines.
        let traj_section = text.split("## Recorded trajectories").nth(1).unwrap();
        for line in traj_section.lines().filter(|l| l.starts_with("  ")) {
            let l = line.trim_start();
            assert!(
                l.starts_with("obs(") || l.starts_with("act="),
                "unexpected trajectory line: {line}"
            );
        }
        // A full 11x6 latent grid dump is 66 symbols; observation grids are 9.
        let (s, _) = reset(env, 0);
        let latent_dump: String = s
            .layout
            .cells
            .iter()
            .map(|c| char::from_digit(c.code() as u32, 36).unwrap())
            .collect();
        assert!(!text.contains(&latent_dump));
        let _ = emit(&s);
    }
}
