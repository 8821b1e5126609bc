//! Dense oracles and executable checks of the convergence theory.

pub mod bounds;
pub mod checks;
pub mod dense;
pub mod probe;
pub mod suite;

pub use bounds::{envelope, residual_bound_audit, rho_theta, theoretical_c, ResidualAudit};
pub use probe::{numerical_range_probe, RangeProbe};
pub use suite::{run_suite, SuiteConfig, SuiteReport};
