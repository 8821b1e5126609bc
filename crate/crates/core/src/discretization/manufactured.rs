use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

use super::problem::ProblemSpec;

/// Separable exact solution `u(x, t) = A e^{-t} Π_i p(x_i)` on the unit box,
/// with `p` a polynomial symmetric about `1/2` that vanishes together with its
/// slope at both ends.
///
/// Fractional derivatives of `p` are exact: the left Riemann–Liouville
/// derivative of `x^k` is `Γ(k+1)/Γ(k+1-α) x^{k-α}`, and symmetry turns the
/// right-sided derivative at `x` into the left-sided one at `1 - x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedSolution {
    amplitude: f64,
    /// Monomial coefficients of `p`, lowest degree first.
    coeffs: Vec<f64>,
}

impl ManufacturedSolution {
    /// `p(x) = x^4 (1-x)^4`.
    pub fn bump(amplitude: f64) -> Self {
        Self {
            amplitude,
            coeffs: vec![0.0, 0.0, 0.0, 0.0, 1.0, -4.0, 6.0, -4.0, 1.0],
        }
    }

    pub fn from_polynomial(amplitude: f64, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 3 {
            return Err(Error::UnsupportedSource("profile polynomial must have degree >= 2".into()));
        }
        if coeffs[0] != 0.0 || coeffs[1] != 0.0 {
            return Err(Error::UnsupportedSource(
                "profile polynomial must vanish with zero slope at x = 0".into(),
            ));
        }
        let reflected = reflect(&coeffs);
        let scale = coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max);
        if reflected.iter().zip(&coeffs).any(|(a, b)| (a - b).abs() > 1e-12 * scale) {
            return Err(Error::UnsupportedSource(
                "only profiles symmetric about x = 1/2 are supported".into(),
            ));
        }
        Ok(Self { amplitude, coeffs })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn profile(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        self.amplitude * (-t).exp() * x.iter().map(|&xi| self.profile(xi)).product::<f64>()
    }

    pub fn time_derivative(&self, x: &[f64], t: f64) -> f64 {
        -self.value(x, t)
    }

    /// Left Riemann–Liouville derivative of order `alpha` of the profile, from 0.
    pub fn left_rl(&self, alpha: f64, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(k, c)| {
                let k = k as f64;
                c * gamma(k + 1.0) / gamma(k + 1.0 - alpha) * x.powf(k - alpha)
            })
            .sum()
    }

    /// Riesz derivative `σ_α (D_left + D_right)` of the profile.
    pub fn riesz(&self, alpha: f64, x: f64) -> f64 {
        let sigma = -1.0 / (2.0 * (alpha * PI / 2.0).cos());
        sigma * (self.left_rl(alpha, x) + self.left_rl(alpha, 1.0 - x))
    }

    /// `f = e ∂_t u - Σ κ_i ∂^{α_i} u` at `(x, t)`.
    pub fn source(&self, spec: &ProblemSpec, x: &[f64], t: f64) -> f64 {
        let decay = self.amplitude * (-t).exp();
        let profiles: Vec<f64> = x.iter().map(|&xi| self.profile(xi)).collect();
        let mut diffusion = 0.0;
        for axis in 0..x.len() {
            let others: f64 = profiles
                .iter()
                .enumerate()
                .filter(|(l, _)| *l != axis)
                .map(|(_, p)| p)
                .product();
            diffusion += spec.kappas[axis] * decay * others * self.riesz(spec.alphas[axis], x[axis]);
        }
        (spec.e_fn)(x, t) * self.time_derivative(x, t) - diffusion
    }
}

/// Coefficients of `p(1 - x)`.
fn reflect(coeffs: &[f64]) -> Vec<f64> {
    let deg = coeffs.len() - 1;
    let mut out = vec![0.0; coeffs.len()];
    for (k, &c) in coeffs.iter().enumerate() {
        // (1 - x)^k = Σ_j C(k, j) (-x)^j
        let mut binom = 1.0;
        for j in 0..=k {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            out[j] += c * binom * sign;
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    debug_assert_eq!(out.len(), deg + 1);
    out
}

/// Manufactured source `f(x, t)`; fails when the problem is not driven by a
/// manufactured solution.
pub fn manufactured_source(spec: &ProblemSpec, x: &[f64], t: f64) -> Result<f64> {
    match &spec.source {
        Some(super::problem::Source::Manufactured(sol)) => Ok(sol.source(spec, x, t)),
        _ => Err(Error::UnsupportedSource("problem is not driven by a manufactured solution".into())),
    }
}
