//! Closed-form constants from the GMRES convergence analysis.

use crate::error::{Error, Result};
use crate::krylov::KrylovResult;

const SQRT6: f64 = 2.449_489_742_783_178;

/// Convergence factor for the two-sided system given `ê = max e`, `ě = min e`:
/// `c = max{√(1 − ě²/ê²), √(16√6/(4+√6)²), √(1 − (ê+ě)²(11−4√6)/(32ê²)),
/// √(1 − 32ě²/((11+4√6)(ê+ě)²))}`.
pub fn theoretical_c(e_hat: f64, e_check: f64) -> Result<f64> {
    if !(e_check > 0.0) || !(e_check <= e_hat) {
        return Err(Error::Argument(format!("need 0 < ě <= ê, got ě = {e_check}, ê = {e_hat}")));
    }
    let s = e_hat + e_check;
    let terms = [
        1.0 - (e_check / e_hat).powi(2),
        16.0 * SQRT6 / (4.0 + SQRT6).powi(2),
        1.0 - s * s * (11.0 - 4.0 * SQRT6) / (32.0 * e_hat * e_hat),
        1.0 - 32.0 * e_check * e_check / ((11.0 + 4.0 * SQRT6) * s * s),
    ];
    Ok(terms.iter().map(|t| t.max(0.0).sqrt()).fold(0.0, f64::max))
}

/// `ρ_θ = 2 sin(θ / (4 − 2θ/π))` for `θ ∈ (0, π/2)`.
pub fn rho_theta(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Argument(format!("θ = {theta} not in (0, π/2)")));
    }
    Ok(2.0 * (theta / (4.0 - 2.0 * theta / std::f64::consts::PI)).sin())
}

/// Interval that must contain `|y*Ăy| / y*y` for the two-sided matrix `Ă`:
/// `[min{2ě/(ê+ě), (4−√6)/4}, max{2ê/(ê+ě), (4+√6)/4}]`.
pub fn envelope(e_hat: f64, e_check: f64) -> (f64, f64) {
    let s = e_hat + e_check;
    (
        (2.0 * e_check / s).min((4.0 - SQRT6) / 4.0),
        (2.0 * e_hat / s).max((4.0 + SQRT6) / 4.0),
    )
}

/// Outcome of checking `‖r_k‖/‖r_0‖ <= (2+c) c^k` at every recorded `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualAudit {
    pub passed: bool,
    /// Smallest `bound - observed` over all `k`.
    pub worst_margin: f64,
    /// `k` attaining the worst margin.
    pub worst_k: usize,
    /// First `k` that violates the bound.
    pub first_violation: Option<usize>,
}

pub fn residual_history_audit(history: &[f64], c: f64) -> ResidualAudit {
    let r0 = history.first().copied().unwrap_or(0.0);
    let mut audit = ResidualAudit {
        passed: true,
        worst_margin: f64::INFINITY,
        worst_k: 0,
        first_violation: None,
    };
    if r0 == 0.0 {
        return audit;
    }
    for (k, r) in history.iter().enumerate().skip(1) {
        let margin = (2.0 + c) * c.powi(k as i32) - r / r0;
        if margin < audit.worst_margin {
            audit.worst_margin = margin;
            audit.worst_k = k;
        }
        if margin < 0.0 && audit.first_violation.is_none() {
            audit.first_violation = Some(k);
            audit.passed = false;
        }
    }
    audit
}

/// [`residual_history_audit`] on a two-sided GMRES result.
pub fn residual_bound_audit(result: &KrylovResult, c: f64) -> ResidualAudit {
    residual_history_audit(&result.residual_history, c)
}

/// `Σa / Σb` lies between the smallest and largest `a_i / b_i` (positive `b_i`).
pub fn mediant_holds(a: &[f64], b: &[f64]) -> bool {
    let ratios = a.iter().zip(b).map(|(x, y)| x / y);
    let lo = ratios.clone().fold(f64::INFINITY, f64::min);
    let hi = ratios.fold(f64::NEG_INFINITY, f64::max);
    let m = a.iter().sum::<f64>() / b.iter().sum::<f64>();
    let tol = 1e-14 * m.abs().max(1.0);
    lo - tol <= m && m <= hi + tol
}
