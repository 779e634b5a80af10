//! Exact LP toolkit for minimal-variation and isoperimetric invariants of finite graphs.

pub mod flows;
pub mod graph;
pub mod invariants;
pub mod lp;
pub mod problems;
pub mod rational;
pub mod symmetry;

pub use graph::{Graph, GraphError, Scale};
pub use lp::{check_feasible, solve, Bound, LinearProgram, LpSolution, LpStatus, Relation, Sense};
pub use rational::Rational;
