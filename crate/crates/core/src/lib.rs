//! Error bounds and solvers for the extended vertical linear
//! complementarity problem: find `x` with `min_j (A_j x + q_j) = 0`
//! componentwise.

pub mod bounds;
pub mod builtin;
pub mod cli;
pub mod error;
pub mod generate;
pub mod json;
pub mod matrix;
pub mod maximize;
pub mod model;
pub mod solver;
pub mod wcheck;

pub use bounds::{BoundOptions, BoundReport, Method, Rigor};
pub use error::{Error, Result};
pub use matrix::{Matrix, Norm};
pub use maximize::{MaxOptions, MaxResult, MaxStatus, WeightFamily};
pub use model::{BlockMatrix, EvlcpInstance};
pub use solver::{SolveOptions, SolveOutcome};
pub use wcheck::{has_row_w_property, RowSelection, WCertificate, WOptions};
