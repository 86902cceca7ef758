//! Candidate world models: four component programs plus pool metadata.

use super::interp::{self, EvalBudget, EvalError};
use super::parse::{compile, ComponentKind, CompiledProgram, ParseError};
use super::tabular::TableComponent;
use super::value::{ObsVal, Value};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::rc::Rc;
use std::sync::Arc;
use thiserror::Error;

/// A parsed, executable component program.
#[derive(Debug, Clone)]
pub struct ComponentProgram {
    pub kind: ComponentKind,
    pub source: String,
    body: Body,
}

#[derive(Debug, Clone)]
enum Body {
    Compiled(CompiledProgram),
    Table(Arc<TableComponent>),
}

impl ComponentProgram {
    /// Whether evaluation can draw from the rng stream. Deterministic
    /// programs may be memoized by callers.
    pub fn samples(&self) -> bool {
        match &self.body {
            Body::Compiled(p) => p.samples,
            Body::Table(t) => t.samples(),
        }
    }

    pub fn table(&self) -> Option<&TableComponent> {
        match &self.body {
            Body::Table(t) => Some(t),
            Body::Compiled(_) => None,
        }
    }

    pub(crate) fn from_table(table: TableComponent) -> ComponentProgram {
        ComponentProgram {
            kind: table.kind(),
            source: table.describe(),
            body: Body::Table(Arc::new(table)),
        }
    }
}

/// Parses DSL source for the given component kind. Failures carry a source
/// position and mark the candidate invalid.
pub fn parse(source: &str, kind: ComponentKind) -> Result<ComponentProgram, ParseError> {
    let compiled = compile(source, kind)?;
    Ok(ComponentProgram { kind, source: source.to_string(), body: Body::Compiled(compiled) })
}

/// The four components of one candidate POMDP model.
#[derive(Debug, Clone)]
pub struct ModelPrograms {
    pub initial: ComponentProgram,
    pub transition: ComponentProgram,
    pub observation: ComponentProgram,
    pub reward: ComponentProgram,
}

impl ModelPrograms {
    pub fn from_sources(
        initial: &str,
        transition: &str,
        observation: &str,
        reward: &str,
    ) -> Result<ModelPrograms, ParseError> {
        Ok(ModelPrograms {
            initial: parse(initial, ComponentKind::Initial)?,
            transition: parse(transition, ComponentKind::Transition)?,
            observation: parse(observation, ComponentKind::Observation)?,
            reward: parse(reward, ComponentKind::Reward)?,
        })
    }

    pub fn sources(&self) -> [&str; 4] {
        [
            &self.initial.source,
            &self.transition.source,
            &self.observation.source,
            &self.reward.source,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Scripted,
    Llm,
    GroundTruth,
    Tabular,
}

/// Score slot: candidates that raised execution errors keep the invalid
/// sentinel, stay in the pool, and are excluded from final selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum ModelScore {
    Pending,
    Valid(f64),
    Invalid,
}

impl ModelScore {
    pub fn valid(self) -> Option<f64> {
        match self {
            ModelScore::Valid(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CandidateModel {
    pub id: u64,
    /// Component sources in (initial, transition, observation, reward)
    /// order, kept verbatim even when parsing failed.
    pub sources: [String; 4],
    /// Parsed programs; `None` when any component failed to parse (the
    /// candidate stays in the pool with the invalid sentinel).
    pub programs: Option<ModelPrograms>,
    pub score: ModelScore,
    pub parent_id: Option<u64>,
    /// Times this node was selected for expansion.
    pub expansions: u32,
    /// Subtree expansions (own plus descendants'): the UCB parent count.
    pub visits: u32,
    pub provenance: Provenance,
}

impl CandidateModel {
    /// Builds a candidate from raw sources; parse failure yields an
    /// invalid-sentinel node carrying the offending diagnostic.
    pub fn from_sources(
        id: u64,
        sources: [String; 4],
        provenance: Provenance,
    ) -> (CandidateModel, Option<ParseError>) {
        let parsed = ModelPrograms::from_sources(&sources[0], &sources[1], &sources[2], &sources[3]);
        let (programs, score, err) = match parsed {
            Ok(p) => (Some(p), ModelScore::Pending, None),
            Err(e) => (None, ModelScore::Invalid, Some(e)),
        };
        (
            CandidateModel {
                id,
                sources,
                programs,
                score,
                parent_id: None,
                expansions: 0,
                visits: 0,
                provenance,
            },
            err,
        )
    }

    pub fn from_programs(id: u64, programs: ModelPrograms, provenance: Provenance) -> CandidateModel {
        let sources = programs.sources().map(str::to_string);
        CandidateModel {
            id,
            sources,
            programs: Some(programs),
            score: ModelScore::Pending,
            parent_id: None,
            expansions: 0,
            visits: 0,
            provenance,
        }
    }
}

/// Execution failure of one component, with enough context for diagnostics.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("{component} program failed: {error}")]
pub struct ExecError {
    pub component: ComponentKind,
    pub error: EvalError,
}

/// Evaluation facade over a model's programs: dispatches DSL vs. table
/// backends, validates result shapes, and enforces the shared call budget.
pub struct ModelEval<'m> {
    programs: &'m ModelPrograms,
    budget: EvalBudget,
    calls_left: u64,
}

impl<'m> ModelEval<'m> {
    pub fn new(programs: &'m ModelPrograms, budget: EvalBudget) -> ModelEval<'m> {
        ModelEval { programs, budget, calls_left: budget.max_calls }
    }

    fn charge_call(&mut self, kind: ComponentKind) -> Result<(), ExecError> {
        if self.calls_left == 0 {
            return Err(ExecError { component: kind, error: EvalError::CallBudget });
        }
        self.calls_left -= 1;
        Ok(())
    }

    /// Samples a model-internal latent state from the initial distribution.
    pub fn initial(&mut self, rng: &mut ChaCha8Rng) -> Result<Value, ExecError> {
        self.charge_call(ComponentKind::Initial)?;
        let v = run_component(&self.programs.initial, &[Value::Rng], Some(rng), &self.budget)?;
        expect_state(ComponentKind::Initial, v)
    }

    pub fn transition(
        &mut self,
        state: &Value,
        action: u8,
        rng: &mut ChaCha8Rng,
    ) -> Result<Value, ExecError> {
        self.charge_call(ComponentKind::Transition)?;
        let args = [state.clone(), Value::Int(action as i64), Value::Rng];
        let v = run_component(&self.programs.transition, &args, Some(rng), &self.budget)?;
        expect_state(ComponentKind::Transition, v)
    }

    /// Deterministic observation prediction.
    pub fn observation(&mut self, state: &Value, action: u8) -> Result<Rc<ObsVal>, ExecError> {
        self.charge_call(ComponentKind::Observation)?;
        let args = [state.clone(), Value::Int(action as i64)];
        match run_component(&self.programs.observation, &args, None, &self.budget)? {
            Value::Obs(o) => Ok(o),
            other => Err(ExecError {
                component: ComponentKind::Observation,
                error: EvalError::Type(format!("observation program returned {}", other.type_name())),
            }),
        }
    }

    pub fn reward(
        &mut self,
        state: &Value,
        action: u8,
        next: &Value,
    ) -> Result<(f64, bool), ExecError> {
        self.charge_call(ComponentKind::Reward)?;
        let args = [state.clone(), Value::Int(action as i64), next.clone()];
        match run_component(&self.programs.reward, &args, None, &self.budget)? {
            Value::Pair(p) => {
                let r = match &p.0 {
                    Value::Int(v) => *v as f64,
                    Value::Float(v) => *v,
                    other => {
                        return Err(ExecError {
                            component: ComponentKind::Reward,
                            error: EvalError::Type(format!("reward must be a number, got {}", other.type_name())),
                        })
                    }
                };
                let done = match &p.1 {
                    Value::Bool(b) => *b,
                    other => {
                        return Err(ExecError {
                            component: ComponentKind::Reward,
                            error: EvalError::Type(format!("done flag must be a bool, got {}", other.type_name())),
                        })
                    }
                };
                Ok((r, done))
            }
            other => Err(ExecError {
                component: ComponentKind::Reward,
                error: EvalError::Type(format!("reward program returned {}", other.type_name())),
            }),
        }
    }
}

/// Evaluates a standalone transition program outside a full model; committee
/// voting queries members this way.
pub fn eval_transition_program(
    prog: &ComponentProgram,
    state: &Value,
    action: u8,
    rng: &mut ChaCha8Rng,
    budget: &EvalBudget,
) -> Result<Value, ExecError> {
    debug_assert_eq!(prog.kind, ComponentKind::Transition);
    let args = [state.clone(), Value::Int(action as i64), Value::Rng];
    let v = run_component(prog, &args, Some(rng), budget)?;
    expect_state(ComponentKind::Transition, v)
}

fn run_component(
    prog: &ComponentProgram,
    args: &[Value],
    rng: Option<&mut ChaCha8Rng>,
    budget: &EvalBudget,
) -> Result<Value, ExecError> {
    match &prog.body {
        Body::Compiled(p) => {
            interp::run(p, args, rng, budget).map_err(|error| ExecError { component: prog.kind, error })
        }
        Body::Table(t) => t.eval(args, rng).map_err(|error| ExecError { component: prog.kind, error }),
    }
}

fn expect_state(kind: ComponentKind, v: Value) -> Result<Value, ExecError> {
    match v {
        Value::State(_) => Ok(v),
        other => Err(ExecError {
            component: kind,
            error: EvalError::Type(format!("{kind} program returned {}", other.type_name())),
        }),
    }
}
