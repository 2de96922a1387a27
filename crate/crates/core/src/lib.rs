//! Exact minimax decision making under finitely generated credal sets.

pub mod calibration;
pub mod consistency;
pub mod corpus;
pub mod credal;
pub mod error;
pub mod linalg;
pub mod lp;
pub mod minimax;
pub mod polytope;
pub mod problem_file;
pub mod rational;
pub mod sampling;

pub use error::{Error, Result};
pub use rational::Rational;
