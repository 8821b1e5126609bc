//! Crank–Nicolson / quasi-compact FCD discretisation in matrix-free form.

mod manufactured;
mod operators;
mod problem;
mod rhs;

pub use manufactured::{manufactured_source, ManufacturedSolution};
pub use operators::{apply_a_tilde, apply_h_inverse, apply_s_alpha, AxisOperators, Discretization, SystemState};
pub use problem::{ProblemSpec, Source, SpaceFn, SpaceTimeFn};
pub use rhs::{build_rhs, source_vector};
