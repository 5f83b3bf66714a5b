//! Problem factories, experiment harnesses and the pieces behind the `mgr`
//! command-line tool.

pub mod config;
pub mod error;
pub mod problems;
pub mod run;
pub mod solve;
pub mod studies;

pub use config::{ProblemSpec, RunConfig};
pub use error::{BenchError, Result};
