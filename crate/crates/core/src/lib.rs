//! Matrix-free solver for multi-dimensional Riesz space fractional diffusion
//! equations with variable time coefficients.
//!
//! Spatial discretisation uses the fractional centred difference (FCD)
//! stencil with a quasi-compact correction, Crank–Nicolson in time. Each time
//! step solves a multi-level Toeplitz-like system by GMRES, preconditioned by
//! a τ-algebra approximation that is diagonalised by the multi-dimensional
//! sine transform.

pub mod discretization;
pub mod error;
pub mod krylov;
pub mod preconditioner;
pub mod presets;
pub mod solver;
pub mod structured;
pub mod transforms;
pub mod validation;

pub use discretization::{Discretization, ManufacturedSolution, ProblemSpec, Source, SystemState};
pub use error::{Error, Result};
pub use krylov::{gmres, GmresConfig, KrylovResult, LinearOperator, PrecondMode};
pub use preconditioner::{build_precond, compute_e_bar, CoefficientBounds, PrecondSpectrum};
pub use solver::{time_march, SolveConfig, SolveReport};
