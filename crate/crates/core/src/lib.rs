//! Higher-order extragradient (HOEG+) for min-max problems with weak-MVI
//! structure, plus a continuous-time companion, the competitive operator
//! `F_α`, and empirical certification of the structural assumptions.

pub mod certify;
pub mod cli;
pub mod competitive;
pub mod continuous;
pub mod error;
pub mod field;
pub mod operator;
pub mod output;
pub mod problem;
pub mod recipes;
pub mod sampling;
pub mod solver;
pub mod subproblem;
pub mod svg;
pub mod taylor;

pub use error::{Error, Result};
pub use field::Field;
pub use operator::Operator;
pub use problem::{builtin, OperatorMode, Point, ProblemSpec};
pub use solver::{run, SolverConfig, TrajectoryLog};
