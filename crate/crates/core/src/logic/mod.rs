//! Terms, literals and NNF formulas over linear arithmetic and booleans.

mod expr;
mod formula;
mod literal;
mod model;
mod normalize;
mod path;
mod term;

use alloc::string::String;

pub use expr::{to_nnf, Expr, Rel};
pub use formula::{CallAtom, Formula, ProcId, Subst};
pub use literal::{CmpOp, Literal};
pub use model::{Model, Value};
pub use normalize::{divides_value, lia_normalize, normalize_for, Bound};
pub use path::{dnf_paths, Path, DEFAULT_PATH_LIMIT};
pub use term::{LinTerm, Sort, Var};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LogicError {
    #[error("call atom under negation")]
    NegatedCall,
    #[error("body expands to more than {limit} paths")]
    PathExplosion { limit: usize },
    #[error("coefficient of `{0}` is not ±1; normalize first")]
    NotNormalized(String),
    #[error("variable `{0}` has the wrong sort here")]
    WrongSort(String),
    #[error("variable `{0}` is unassigned")]
    UnassignedVar(String),
    #[error("call atoms cannot be evaluated")]
    CallInEval,
    #[error("model does not satisfy the formula")]
    ModelMismatch,
}
