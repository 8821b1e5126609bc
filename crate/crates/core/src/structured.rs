//! Fractional centred difference stencils and the τ algebra.
//!
//! A symmetric Toeplitz matrix `T` splits as `T = τ(T) + H(T)`, where `H(T)`
//! is a Hankel matrix and `τ(T)` is diagonalised by the DST-I:
//! `τ(T) = S diag(q) S`. The compact operator `I + (α/24) tridiag(1,-2,1)`
//! lives in the same algebra, which is what makes the preconditioner cheap.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use statrs::function::gamma::gamma;

use crate::error::{check_len, Error, Result};
use crate::transforms::{CirculantEmbedding, FftScratch, SineTransformPlan};

/// FCD coefficients `s_0, ..., s_{n-1}` for one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FcdStencil {
    alpha: f64,
    coeffs: Vec<f64>,
}

impl FcdStencil {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `s_0 + 2 (s_1 + ... + s_{n-1})`.
    pub fn partial_sum(&self) -> f64 {
        self.coeffs[0] + 2.0 * self.coeffs[1..].iter().sum::<f64>()
    }

    /// Builds a stencil from raw coefficients without checking any sign
    /// pattern. Used to exercise validation on deliberately broken input.
    pub fn from_raw(alpha: f64, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Argument("stencil needs at least one coefficient".into()));
        }
        Ok(Self { alpha, coeffs })
    }
}

/// FCD coefficients of order `alpha` in `(1, 2]`:
/// `s_0 = Γ(α+1)/Γ(α/2+1)²`, `s_k = (1 - (α+1)/(α/2+k)) s_{k-1}`.
pub fn fcd_coefficients(alpha: f64, n: usize) -> Result<FcdStencil> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::Domain(format!("fractional order {alpha} not in (1, 2]")));
    }
    if n == 0 {
        return Err(Error::Argument("stencil length must be positive".into()));
    }
    let g = gamma(alpha / 2.0 + 1.0);
    let mut coeffs = Vec::with_capacity(n);
    // Γ(3)/Γ(2)² = 2; the Lanczos gamma is a few ulps off there
    coeffs.push(if alpha == 2.0 { 2.0 } else { gamma(alpha + 1.0) / (g * g) });
    for k in 1..n {
        let prev = coeffs[k - 1];
        coeffs.push((1.0 - (alpha + 1.0) / (alpha / 2.0 + k as f64)) * prev);
    }
    Ok(FcdStencil { alpha, coeffs })
}

/// `q_i = t_0 + 2 sum_{j=1}^{n-1} t_j cos(pi j (i+1)/(n+1))` for `i = 0..n`,
/// via one FFT of length `2(n+1)`.
pub fn tau_eigenvalues(first_col: &[f64]) -> Result<Vec<f64>> {
    let n = first_col.len();
    if n == 0 {
        return Err(Error::Argument("Toeplitz order must be positive".into()));
    }
    let l = 2 * (n + 1);
    let mut buf = vec![Complex64::new(0.0, 0.0); l];
    buf[0].re = first_col[0];
    for j in 1..n {
        buf[j].re = first_col[j];
        buf[l - j].re = first_col[j];
    }
    FftPlanner::new().plan_fft_forward(l).process(&mut buf);
    Ok(buf[1..=n].iter().map(|c| c.re).collect())
}

/// A matrix of the τ algebra, `S diag(eigenvalues) S`.
#[derive(Debug, Clone)]
pub struct TauOperator {
    eigenvalues: Vec<f64>,
    plan: Arc<SineTransformPlan>,
}

impl TauOperator {
    pub fn new(eigenvalues: Vec<f64>, plan: Arc<SineTransformPlan>) -> Result<Self> {
        check_len(plan.len(), eigenvalues.len())?;
        Ok(Self { eigenvalues, plan })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn plan(&self) -> &Arc<SineTransformPlan> {
        &self.plan
    }

    /// Applies `S diag(g(q)) S` in place.
    pub fn apply_fn_in_place(&self, x: &mut [f64], g: impl Fn(f64) -> f64, scratch: &mut FftScratch) {
        self.plan.apply_in_place(x, scratch);
        for (v, &q) in x.iter_mut().zip(&self.eigenvalues) {
            *v *= g(q);
        }
        self.plan.apply_in_place(x, scratch);
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), x.len())?;
        let mut y = x.to_vec();
        self.apply_fn_in_place(&mut y, |q| q, &mut FftScratch::new());
        Ok(y)
    }

    pub fn solve(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), x.len())?;
        let mut y = x.to_vec();
        self.apply_fn_in_place(&mut y, |q| 1.0 / q, &mut FftScratch::new());
        Ok(y)
    }
}

/// τ(T) for the symmetric Toeplitz matrix with the given first column.
pub fn tau_from_toeplitz(first_col: &[f64]) -> Result<TauOperator> {
    let eig = tau_eigenvalues(first_col)?;
    let plan = Arc::new(SineTransformPlan::new(first_col.len())?);
    TauOperator::new(eig, plan)
}

/// The Hankel part `H(T) = T - τ(T)`.
///
/// Antidiagonal `k` (0-based, entry `(i, j)` with `i + j = k`) holds
/// `[t_2, ..., t_{n-1}, 0, 0, 0, t_{n-1}, ..., t_2][k]`. The sequence is a
/// palindrome, so `J H(T)` is a symmetric Toeplitz matrix and the product
/// reuses the circulant kernel followed by a flip.
#[derive(Debug, Clone)]
pub struct HankelCorrection {
    antidiagonals: Vec<f64>,
    flipped: CirculantEmbedding,
}

impl HankelCorrection {
    pub fn from_toeplitz(first_col: &[f64]) -> Result<Self> {
        let n = first_col.len();
        if n == 0 {
            return Err(Error::Argument("Toeplitz order must be positive".into()));
        }
        let antidiagonals: Vec<f64> = (0..2 * n - 1)
            .map(|k| {
                let s = k + 2; // 1-based i + j
                if s < n {
                    first_col[s]
                } else if s <= n + 2 {
                    0.0
                } else {
                    first_col[2 * n + 2 - s]
                }
            })
            .collect();
        let flipped = CirculantEmbedding::new(&antidiagonals[n - 1..])?;
        Ok(Self {
            antidiagonals,
            flipped,
        })
    }

    pub fn len(&self) -> usize {
        self.flipped.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn antidiagonals(&self) -> &[f64] {
        &self.antidiagonals
    }

    pub fn apply_in_place(&self, x: &mut [f64], scratch: &mut FftScratch) {
        self.flipped.apply_in_place(x, scratch);
        x.reverse();
    }
}

/// `H(T) x` in `O(n log n)`.
pub fn hankel_matvec(h: &HankelCorrection, x: &[f64]) -> Result<Vec<f64>> {
    check_len(h.len(), x.len())?;
    let mut y = x.to_vec();
    h.apply_in_place(&mut y, &mut FftScratch::new());
    Ok(y)
}

/// The compact operator `I + (α/24) tridiag(1, -2, 1)` of order `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TridiagH {
    pub alpha: f64,
    pub n: usize,
}

impl TridiagH {
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::Domain(format!("fractional order {alpha} not in (1, 2]")));
        }
        if n == 0 {
            return Err(Error::Argument("order must be positive".into()));
        }
        Ok(Self { alpha, n })
    }

    pub fn off_diagonal(&self) -> f64 {
        self.alpha / 24.0
    }

    pub fn diagonal(&self) -> f64 {
        1.0 - self.alpha / 12.0
    }

    pub fn apply_in_place(&self, x: &mut [f64]) {
        let (c, o) = (self.diagonal(), self.off_diagonal());
        let mut prev = 0.0;
        let n = x.len();
        for i in 0..n {
            let cur = x[i];
            let next = if i + 1 < n { x[i + 1] } else { 0.0 };
            x[i] = c * cur + o * (prev + next);
            prev = cur;
        }
    }
}

/// Eigenvalues `1 - (α/6) sin²((i+1) π / (2n+2))`, `i = 0..n`, in the same
/// order as [`tau_eigenvalues`]: index `i` pairs with DST column `i + 1`.
pub fn h_eigenvalues(h: &TridiagH) -> Vec<f64> {
    let n = h.n as f64;
    (1..=h.n)
        .map(|k| {
            let s = (k as f64 * PI / (2.0 * n + 2.0)).sin();
            1.0 + h.alpha / 24.0 * (-4.0 * s * s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validation::dense;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const ALPHAS: [f64; 5] = [1.1, 1.3, 1.5, 1.7, 1.9];

    #[test]
    fn alpha_two_gives_second_difference() {
        let s = fcd_coefficients(2.0, 3).unwrap();
        assert_eq!(s.coeffs(), &[2.0, -1.0, 0.0]);
    }

    #[test]
    fn s0_matches_gamma_oracle() {
        // Γ(2.5) = 3√π/4; Γ(1.75) from the reflection-free product Γ(1.75) = 0.75 Γ(0.75).
        let g25 = 0.75 * std::f64::consts::PI.sqrt();
        let g175 = 0.919_062_526_848_883_5;
        let s = fcd_coefficients(1.5, 1).unwrap();
        let expect = g25 / (g175 * g175);
        assert!((s.coeffs()[0] - expect).abs() < 1e-13 * expect);
        assert!((s.coeffs()[0] - 1.5738).abs() < 1e-4);
    }

    #[test]
    fn partial_sums_shrink_towards_zero() {
        let s = fcd_coefficients(1.3, 4096).unwrap();
        let total = s.partial_sum();
        assert!(total > 0.0 && total < 1e-2, "{total}");
        let mut last = f64::INFINITY;
        for n in [64, 256, 1024, 4096] {
            let p = FcdStencil::from_raw(1.3, s.coeffs()[..n].to_vec()).unwrap().partial_sum();
            assert!(p > 0.0 && p < last);
            last = p;
        }
    }

    #[test]
    fn sign_pattern_holds() {
        for alpha in ALPHAS {
            let s = fcd_coefficients(alpha, 512).unwrap();
            assert!(s.coeffs()[0] > 0.0);
            assert!(s.coeffs()[1..].iter().all(|&c| c < 0.0));
        }
    }

    #[test]
    fn rejects_out_of_range_order() {
        assert!(matches!(fcd_coefficients(1.0, 4), Err(Error::Domain(_))));
        assert!(matches!(fcd_coefficients(2.5, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn tau_of_identity_is_identity() {
        let mut col = vec![0.0; 10];
        col[0] = 1.0;
        let tau = tau_from_toeplitz(&col).unwrap();
        assert!(tau.eigenvalues().iter().all(|&q| (q - 1.0).abs() < 1e-14));
    }

    #[test]
    fn tau_of_laplacian() {
        let n = 11;
        let mut col = vec![0.0; n];
        col[0] = 2.0;
        col[1] = -1.0;
        let q = tau_eigenvalues(&col).unwrap();
        for (i, qi) in q.iter().enumerate() {
            let s = ((i + 1) as f64 * PI / (2.0 * n as f64 + 2.0)).sin();
            assert!((qi - 4.0 * s * s).abs() < 1e-14);
        }
    }

    #[test]
    fn tau_eigenvalues_match_dense_diagonalisation() {
        let s = fcd_coefficients(1.7, 12).unwrap();
        let t = dense::tau_matrix(s.coeffs());
        let mut dense_eig: Vec<f64> = t.symmetric_eigen().eigenvalues.iter().copied().collect();
        dense_eig.sort_by(f64::total_cmp);
        let mut fast = tau_eigenvalues(s.coeffs()).unwrap();
        fast.sort_by(f64::total_cmp);
        for (a, b) in fast.iter().zip(&dense_eig) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn tau_reconstruction_small_orders() {
        // includes n <= 3, where H(T) may or may not vanish
        for n in 1..=8 {
            let col: Vec<f64> = (0..n).map(|k| if k == 0 { 5.0 } else { -1.0 / (k * k) as f64 }).collect();
            let q = tau_eigenvalues(&col).unwrap();
            let s = dense::sine_matrix(n);
            let recon = &s * DMatrix::from_diagonal(&DVector::from_vec(q)) * &s;
            let err = (recon - dense::tau_matrix(&col)).norm();
            assert!(err < 1e-13, "n={n} err={err}");
        }
    }

    #[test]
    fn hankel_vanishes_for_tiny_orders() {
        for n in 1..=2 {
            let col: Vec<f64> = (0..n).map(|k| 1.0 + k as f64).collect();
            let h = HankelCorrection::from_toeplitz(&col).unwrap();
            let y = hankel_matvec(&h, &vec![1.0; n]).unwrap();
            assert!(y.iter().all(|&v| v == 0.0));
        }
        // n = 3 carries t_2 in the corner antidiagonals
        let h = HankelCorrection::from_toeplitz(&[4.0, -1.0, -0.5]).unwrap();
        assert_eq!(h.antidiagonals(), &[-0.5, 0.0, 0.0, 0.0, -0.5]);
    }

    #[test]
    fn hankel_first_column_read_off() {
        let h = HankelCorrection::from_toeplitz(&[5.0, -1.0, -0.5, -0.3, -0.2]).unwrap();
        let y = hankel_matvec(&h, &[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let expect = [-0.5, -0.3, -0.2, 0.0, 0.0];
        for (a, b) in y.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14, "{y:?}");
        }
    }

    #[test]
    fn hankel_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = fcd_coefficients(1.5, 32).unwrap();
        let h = HankelCorrection::from_toeplitz(s.coeffs()).unwrap();
        let dense_h = dense::hankel_matrix(h.antidiagonals());
        let x: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = hankel_matvec(&h, &x).unwrap();
        let oracle = &dense_h * DVector::from_column_slice(&x);
        let err = (DVector::from_vec(fast) - &oracle).norm() / oracle.norm();
        assert!(err < 1e-12, "{err}");
        assert!(hankel_matvec(&h, &x[..5]).is_err());
    }

    #[test]
    fn h_eigenvalues_closed_form() {
        let h = TridiagH::new(1.5, 4).unwrap();
        let lam = h_eigenvalues(&h);
        for (i, l) in lam.iter().enumerate() {
            let s = ((i + 1) as f64 * PI / 10.0).sin();
            assert!((l - (1.0 - 0.25 * s * s)).abs() < 1e-15);
        }
        let near_two = h_eigenvalues(&TridiagH::new(2.0, 4000).unwrap());
        let last = *near_two.last().unwrap();
        assert!(last > 2.0 / 3.0 && last - 2.0 / 3.0 < 1e-5);
    }

    #[test]
    fn h_eigenvalues_match_dense() {
        for alpha in ALPHAS {
            for n in [1, 2, 5, 17, 32] {
                let h = TridiagH::new(alpha, n).unwrap();
                let mut fast = h_eigenvalues(&h);
                fast.sort_by(f64::total_cmp);
                let mut oracle: Vec<f64> = dense::compact_matrix(alpha, n).symmetric_eigen().eigenvalues.iter().copied().collect();
                oracle.sort_by(f64::total_cmp);
                for (a, b) in fast.iter().zip(&oracle) {
                    assert!((a - b).abs() < 1e-13);
                    assert!(*a > 2.0 / 3.0 && *a < 1.0);
                }
            }
        }
    }

    #[test]
    fn tridiag_apply_matches_dense() {
        let h = TridiagH::new(1.7, 6).unwrap();
        let x = vec![1.0, -2.0, 0.5, 3.0, 0.0, 1.5];
        let mut y = x.clone();
        h.apply_in_place(&mut y);
        let oracle = dense::compact_matrix(1.7, 6) * DVector::from_vec(x);
        for (a, b) in y.iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn fcd_toeplitz_product_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = fcd_coefficients(1.5, 16).unwrap();
        let emb = CirculantEmbedding::new(s.coeffs()).unwrap();
        let x: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = crate::transforms::toeplitz_matvec(&emb, &x).unwrap();
        let oracle = dense::toeplitz_matrix(s.coeffs()) * DVector::from_column_slice(&x);
        let err = (DVector::from_vec(fast) - &oracle).norm() / oracle.norm();
        assert!(err < 1e-12);
    }

    #[test]
    fn tau_operator_solve_inverts_apply() {
        let s = fcd_coefficients(1.9, 20).unwrap();
        let tau = tau_from_toeplitz(s.coeffs()).unwrap();
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).cos()).collect();
        let y = tau.solve(&tau.apply(&x).unwrap()).unwrap();
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
