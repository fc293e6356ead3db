//! Numerical laboratory for heat-conducting power-law fluids.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod constitutive;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod inequality_lab;
pub mod lyapunov;
pub mod steady_state;
pub mod quadrature;
pub mod report;
pub mod solver;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/constitutive.md")]
    pub struct Constitutive;
    #[doc = include_str!("../../../book/src/grid.md")]
    pub struct Grid;
    #[doc = include_str!("../../../book/src/steady_state.md")]
    pub struct SteadyState;
    #[doc = include_str!("../../../book/src/solver.md")]
    pub struct Solver;
    #[doc = include_str!("../../../book/src/lyapunov.md")]
    pub struct Lyapunov;
    #[doc = include_str!("../../../book/src/inequality_lab.md")]
    pub struct InequalityLab;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
