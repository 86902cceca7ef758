//! The model DSL: parser, sandboxed interpreter, candidate-model plumbing,
//! the hand-written program corpus, and the tabular baseline.

pub mod golden;
mod interp;
mod model;
mod parse;
pub mod tabular;
pub mod value;

pub use interp::{EvalBudget, EvalError};
pub use model::{
    eval_transition_program, parse, CandidateModel, ComponentProgram, ExecError, ModelEval,
    ModelPrograms, ModelScore, Provenance,
};
pub use parse::{ComponentKind, ParseError, CONSTANTS};
pub use tabular::{tabular_fit, TabularError};
pub use value::{state_to_value, ObsCodes, Value};
