//! Measurable quantities behind each structural and convergence claim.
//! Each function returns the observed number; the suite compares it to the
//! bound.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretization::{ProblemSpec, SystemState};
use crate::error::{Error, Result};
use crate::krylov::{GmresConfig, PrecondMode};
use crate::solver::{assemble_a_tilde, assemble_precond_power, setup, solve_step, sorted_eigenvalues};
use crate::structured::{fcd_coefficients, h_eigenvalues, tau_eigenvalues, FcdStencil, TridiagH};

use super::bounds::theoretical_c;
use super::dense;

/// Sign pattern and partial sum of an FCD stencil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilFacts {
    pub s0: f64,
    /// Largest `s_k`, `k >= 1`; negative when the sign pattern holds.
    pub max_off: f64,
    /// `s_0 + 2 Σ_{k>=1} s_k`.
    pub partial_sum: f64,
}

pub fn stencil_facts(stencil: &FcdStencil) -> StencilFacts {
    let c = stencil.coeffs();
    StencilFacts {
        s0: c[0],
        max_off: c[1..].iter().copied().fold(f64::NEG_INFINITY, f64::max),
        partial_sum: stencil.partial_sum(),
    }
}

/// `‖S diag(q) S - (T - H(T))‖_F / ‖T‖_F` with `q` from the fast path and
/// `τ(T)` assembled densely from its Toeplitz and Hankel parts.
pub fn tau_exactness(alpha: f64, n: usize) -> Result<f64> {
    let col = fcd_coefficients(alpha, n)?.coeffs().to_vec();
    let q = tau_eigenvalues(&col)?;
    let s = dense::sine_matrix(n);
    let recon = &s * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(q)) * &s;
    let t = dense::toeplitz_matrix(&col);
    Ok((recon - dense::tau_matrix(&col)).norm() / t.norm())
}

/// `‖τ(T)^{-1/2} H(T) τ(T)^{-1/2}‖₂` for the FCD Toeplitz matrix, all dense.
pub fn hankel_relative_norm(alpha: f64, n: usize) -> Result<f64> {
    let col = fcd_coefficients(alpha, n)?.coeffs().to_vec();
    let tau = dense::tau_matrix(&col);
    let w = dense::sym_fn(&tau, |l| 1.0 / l.sqrt());
    Ok(dense::spectral_norm(&(&w * dense::hankel_part(&col) * &w)))
}

/// Extreme eigenvalues of `H_α` and `cond(H_α^{1/2})`.
pub fn compact_spectrum(alpha: f64, n: usize) -> Result<(f64, f64, f64)> {
    let eig = h_eigenvalues(&TridiagH::new(alpha, n)?);
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi, (hi / lo).sqrt()))
}

/// Largest deviation between the sorted eigenvalues of `A ⊗ B` and the sorted
/// pairwise products `λ_i μ_j`, for random symmetric `A`, `B`.
pub fn kronecker_eigen_gap(m: usize, n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sym = |k: usize| {
        let g = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
        &g + g.transpose()
    };
    let (a, b) = (sym(m), sym(n));
    let mut direct: Vec<f64> = dense::kron(&a, &b).symmetric_eigen().eigenvalues.iter().copied().collect();
    let la = a.symmetric_eigen().eigenvalues;
    let lb = b.symmetric_eigen().eigenvalues;
    let mut products: Vec<f64> = la.iter().flat_map(|x| lb.iter().map(move |y| x * y)).collect();
    direct.sort_by(f64::total_cmp);
    products.sort_by(f64::total_cmp);
    direct.iter().zip(&products).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Smallest `min_i a_i / b_i`-to-mediant and mediant-to-`max` slack over
/// random positive families; negative means the mediant inequality failed.
pub fn mediant_slack(trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let len = rng.random_range(1..12);
        let a: Vec<f64> = (0..len).map(|_| rng.random_range(1e-3..1e3)).collect();
        let b: Vec<f64> = (0..len).map(|_| rng.random_range(1e-3..1e3)).collect();
        let ratios: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x / y).collect();
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let med = a.iter().sum::<f64>() / b.iter().sum::<f64>();
        let scale = hi.abs().max(1.0);
        worst = worst.min((med - lo) / scale).min((hi - med) / scale);
    }
    worst
}

/// Greedy nearest-neighbour distance between two eigenvalue lists.
fn spectrum_distance(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for &(re, im) in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, &(r, i))| (j, (r - re).hypot(i - im)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("equal lengths");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Distance between the spectra of `P^{-1} Ã` and `P^{-1/2} Ã P^{-1/2}`,
/// relative to the spectral radius.
pub fn similarity_gap(spec: &ProblemSpec, m: usize) -> Result<f64> {
    let s = setup(spec, 1)?;
    let a = assemble_a_tilde(&s.ops, m)?;
    let one = sorted_eigenvalues(assemble_precond_power(&s.precond, -1.0) * &a)?;
    let half = assemble_precond_power(&s.precond, -0.5);
    let two = sorted_eigenvalues(&half * a * &half)?;
    let radius = one.iter().map(|(r, i)| r.hypot(*i)).fold(0.0, f64::max);
    Ok(spectrum_distance(&one, &two) / radius)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clustering {
    /// Largest pairwise distance among eigenvalues of `Ã`.
    pub diameter_plain: f64,
    /// Same for `P^{-1} Ã`.
    pub diameter_preconditioned: f64,
    pub min_real_preconditioned: f64,
}

fn diameter(ev: &[(f64, f64)]) -> f64 {
    let mut d = 0.0f64;
    for (i, a) in ev.iter().enumerate() {
        for b in &ev[i + 1..] {
            d = d.max((a.0 - b.0).hypot(a.1 - b.1));
        }
    }
    d
}

pub fn clustering(spec: &ProblemSpec, m: usize) -> Result<Clustering> {
    let dump = crate::solver::spectrum_dump(spec, m)?;
    Ok(Clustering {
        diameter_plain: diameter(&dump.a_tilde),
        diameter_preconditioned: diameter(&dump.preconditioned),
        min_real_preconditioned: dump.preconditioned.iter().map(|z| z.0).fold(f64::INFINITY, f64::min),
    })
}

/// Worst case over a whole time march of one inequality per GMRES iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarchAudit {
    /// Number of `(step, iteration)` pairs checked.
    pub checks: usize,
    /// Smallest `bound - observed`.
    pub worst_margin: f64,
    /// `(step, iteration)` of the worst margin.
    pub worst_at: (usize, usize),
    pub first_violation: Option<(usize, usize)>,
}

impl MarchAudit {
    fn new() -> Self {
        Self {
            checks: 0,
            worst_margin: f64::INFINITY,
            worst_at: (0, 0),
            first_violation: None,
        }
    }

    fn record(&mut self, step: usize, j: usize, margin: f64) {
        self.checks += 1;
        if margin < self.worst_margin {
            self.worst_margin = margin;
            self.worst_at = (step, j);
        }
        if margin < 0.0 && self.first_violation.is_none() {
            self.first_violation = Some((step, j));
        }
    }

    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

fn with_mode(cfg: &GmresConfig, mode: PrecondMode) -> GmresConfig {
    GmresConfig { mode, ..cfg.clone() }
}

/// Marches `spec` with the one-sided solver and, on the same system at every
/// step, also runs the two-sided solver from the matching initial guess.
/// Checks `‖r_j‖ <= ‖r̃_j‖ / √ē + slack` for every common iteration `j`.
pub fn one_two_sided_relation(spec: &ProblemSpec, cfg: &GmresConfig, slack: f64) -> Result<MarchAudit> {
    let s = setup(spec, 1)?;
    let scale = 1.0 / s.bounds.e_bar.sqrt();
    let one_cfg = with_mode(cfg, PrecondMode::OneSided);
    let two_cfg = with_mode(cfg, PrecondMode::TwoSided);
    let mut state = SystemState::initial(s.ops.clone());
    let mut audit = MarchAudit::new();
    for m in 0..spec.m {
        let one = solve_step(&s, &state, m, &one_cfg)?;
        let two = solve_step(&s, &state, m, &two_cfg)?;
        for (j, (r, rt)) in one.residual_history.iter().zip(&two.residual_history).enumerate() {
            audit.record(m, j, scale * rt + slack - r);
        }
        if !one.converged {
            return Err(Error::NotConverged {
                step: m,
                iterations: one.iterations,
                residual: one.final_relative_residual,
            });
        }
        state.u = one.solution;
        state.step = m + 1;
    }
    Ok(audit)
}

/// Marches `spec` two-sided and checks `‖r_k‖/‖r_0‖ <= (2+c) c^k` at every
/// iteration of every step, `c` from the coefficient bounds.
pub fn two_sided_rate(spec: &ProblemSpec, cfg: &GmresConfig) -> Result<(f64, MarchAudit)> {
    let s = setup(spec, 1)?;
    let c = theoretical_c(s.bounds.e_hat, s.bounds.e_check)?;
    let two_cfg = with_mode(cfg, PrecondMode::TwoSided);
    let mut state = SystemState::initial(s.ops.clone());
    let mut audit = MarchAudit::new();
    for m in 0..spec.m {
        let res = solve_step(&s, &state, m, &two_cfg)?;
        let h = &res.residual_history;
        let r0 = h[0];
        for (k, r) in h.iter().enumerate().skip(1) {
            let margin = if r0 > 0.0 { (2.0 + c) * c.powi(k as i32) - r / r0 } else { 0.0 };
            audit.record(m, k, margin);
        }
        state.u = res.solution;
        state.step = m + 1;
    }
    Ok((c, audit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Preset;

    #[test]
    fn small_instances() {
        assert!(tau_exactness(1.5, 16).unwrap() < 1e-13);
        assert!(hankel_relative_norm(1.5, 32).unwrap() < 0.5);
        let (lo, hi, cond) = compact_spectrum(1.9, 64).unwrap();
        assert!(lo > 2.0 / 3.0 && hi < 1.0 && cond <= 6f64.sqrt() / 2.0);
        assert!(kronecker_eigen_gap(4, 3, 5) < 1e-12);
        assert!(mediant_slack(500, 9) >= 0.0);
    }

    #[test]
    fn spectra_and_relations_on_a_short_run() {
        let spec = Preset::Ex1.spec(&[1.5], 15, 32).unwrap();
        assert!(similarity_gap(&spec, 0).unwrap() < 1e-9);
        let c = clustering(&spec, 0).unwrap();
        assert!(c.diameter_preconditioned < c.diameter_plain);
        assert!(c.min_real_preconditioned > 0.0);
        let cfg = GmresConfig::for_dimension(1);
        let rel = one_two_sided_relation(&spec, &cfg, 1e-12).unwrap();
        assert!(rel.passed() && rel.checks > 32);
        let (c, rate) = two_sided_rate(&spec, &cfg).unwrap();
        assert!(c < 1.0 && rate.passed());
    }

    #[test]
    fn distance_matches_permuted_lists() {
        let a = [(1.0, 0.5), (1.0, -0.5), (2.0, 0.0)];
        let b = [(2.0, 0.0), (1.0, -0.5), (1.0, 0.5 + 1e-3)];
        assert!((spectrum_distance(&a, &b) - 1e-3).abs() < 1e-12);
    }
}
