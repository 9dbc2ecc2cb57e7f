//! Perron vectors of nonnegative matrices and M-matrix solves through
//! diagonal scalings that make `L M R` row-column diagonally dominant.
//!
//! The layers, bottom up:
//!
//! * [`sparse`] and [`io`]: compressed storage, norms, structural checks, Matrix Market files.
//! * [`lu`] and [`rcdd`]: solvers for RCDD and SDD systems behind [`rcdd::LinearOperator`].
//! * [`scaling`]: preconditioned Richardson, the halving-shift scaling loop, M-matrix solves,
//!   the symmetric variant and the factor-width-2 reduction.
//! * [`perron`]: M-matrix decisions, eigenvalue bisection and certified Perron pairs.
//! * [`apps`]: Katz centrality, Leontief systems, top singular triplets, random-walk kernels.
//! * [`oracle`]: slow dense reference routines used for verification.

pub mod apps;
pub mod error;
pub mod io;
pub mod lu;
pub mod oracle;
pub mod perron;
pub mod rcdd;
pub mod report;
pub mod scaling;
pub mod sparse;

pub use error::{Error, Result};
pub use sparse::{DenseVector, NormReport, SparseMatrix};

/// Version of this crate, echoed in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
