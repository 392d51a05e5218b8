//! Safety model checking for recursive programs given in logical form.
//!
//! A program is a list of procedures whose bodies are quantifier-free
//! formulas over linear arithmetic (or plain Booleans) with positive call
//! atoms. The checker maintains two families of facts per procedure and
//! call-stack bound: reachability facts under-approximate the bounded
//! input/output relation, summary facts over-approximate it. Bounded
//! safety is decided by a small set of inference rules and iterative
//! deepening turns bounded proofs into inductive ones.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line
//! front end and anything touching the OS live in the companion `recmc`
//! crate.
#![no_std]
#![deny(rust_2018_idioms, unused_must_use)]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod driver;
pub mod engine;
pub mod itp;
pub mod kernel;
pub mod logic;
pub mod num;
pub mod program;
pub mod qe;

pub use driver::{check, CheckConfig, CheckOutcome, CounterexampleTree, SafetyProof, Verdict};
pub use engine::{EngineConfig, Projection};
pub use itp::ItpStrategy;
pub use kernel::{Kernel, KernelConfig};
pub use logic::{Formula, Literal, LinTerm, Sort, Var};
pub use program::{Procedure, ProcId, Program};
