//! Simulation and verification toolkit for the diffusion-type evolution
//! u_t = Δ_F u driven by an averaging operator F on a directed m-ary tree.
//!
//! - [`tree`]: vertex addressing, flat level-order storage, ψ-embedding.
//! - [`averaging`]: operator implementations (mean, implicit p-average,
//!   median/midrange/min-max blends) and randomized axiom verification.
//! - [`datum`]: initial conditions (finite support, geometric envelope,
//!   per-level, scaling eigen-data).
//! - [`solver`]: exponential-integrator time stepping of the truncated
//!   Cauchy problem, Picard iteration of the integral operator, residuals,
//!   certified truncation tail bounds.
//! - [`closedform`]: exact solutions used as oracles.
//! - [`decay`]: decay bounds and verification reports.
//! - [`config`], [`export`]: experiment configs and deterministic CSV/JSON
//!   output backing the CLI.

pub mod averaging;
pub mod closedform;
pub mod config;
pub mod datum;
pub mod decay;
pub mod error;
pub mod export;
pub mod fuzz;
pub mod solver;
pub mod tree;

pub use error::{Error, Result};
