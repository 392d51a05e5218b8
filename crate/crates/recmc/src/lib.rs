//! Input format, witnesses, generators and the command line for
//! `recmc-core`.

pub mod cli;
pub mod gen;
pub mod rpl;
pub mod witness;

pub use rpl::{parse, print, SourceUnit};
