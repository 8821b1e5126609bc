//! Dense reference assemblies.
//!
//! Every matrix here is built entry by entry or with explicit Kronecker
//! products, never through the FFT kernels, so it can serve as an oracle for
//! the matrix-free path. Sizes are meant to stay small.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::gamma;

use crate::discretization::ProblemSpec;
use crate::error::{Error, Result};

pub fn sine_matrix(n: usize) -> DMatrix<f64> {
    let s = (2.0 / (n as f64 + 1.0)).sqrt();
    DMatrix::from_fn(n, n, |j, k| s * (PI * ((j + 1) * (k + 1)) as f64 / (n as f64 + 1.0)).sin())
}

pub fn toeplitz_matrix(col: &[f64]) -> DMatrix<f64> {
    let n = col.len();
    DMatrix::from_fn(n, n, |i, j| col[i.abs_diff(j)])
}

/// Hankel matrix with entry `(i, j)` (0-based) equal to `antidiagonals[i + j]`.
pub fn hankel_matrix(antidiagonals: &[f64]) -> DMatrix<f64> {
    let n = antidiagonals.len().div_ceil(2);
    DMatrix::from_fn(n, n, |i, j| antidiagonals[i + j])
}

/// `H(T)` straight from its antidiagonal listing
/// `[t_2, ..., t_{n-1}, 0, 0, 0, t_{n-1}, ..., t_2]`.
pub fn hankel_part(col: &[f64]) -> DMatrix<f64> {
    let n = col.len();
    let mut list: Vec<f64> = Vec::with_capacity(2 * n + 1);
    list.extend(col.iter().skip(2));
    list.extend([0.0, 0.0, 0.0]);
    list.extend(col.iter().skip(2).rev());
    // orders below 3 leave fewer than 2n-1 antidiagonals in the listing
    let need = 2 * n - 1;
    let list: Vec<f64> = if list.len() >= need {
        list[..need].to_vec()
    } else {
        vec![0.0; need]
    };
    hankel_matrix(&list)
}

/// `τ(T) = T - H(T)`.
pub fn tau_matrix(col: &[f64]) -> DMatrix<f64> {
    toeplitz_matrix(col) - hankel_part(col)
}

/// `I + (α/24) tridiag(1, -2, 1)`.
pub fn compact_matrix(alpha: f64, n: usize) -> DMatrix<f64> {
    let c = alpha / 24.0;
    DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 1.0 - 2.0 * c,
        1 => c,
        _ => 0.0,
    })
}

/// FCD coefficient from its closed form
/// `(-1)^k Γ(α+1) / (Γ(α/2 - k + 1) Γ(α/2 + k + 1))`.
pub fn fcd_closed_form(alpha: f64, k: usize) -> f64 {
    let k = k as f64;
    let sign = if (k as usize) % 2 == 0 { 1.0 } else { -1.0 };
    sign * gamma(alpha + 1.0) / (gamma(alpha / 2.0 - k + 1.0) * gamma(alpha / 2.0 + k + 1.0))
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// `A_d ⊗ ... ⊗ A_1` given `[A_1, ..., A_d]` (axis order).
pub fn kron_axes(factors: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut iter = factors.iter().rev();
    let first = iter.next().expect("at least one factor").clone();
    iter.fold(first, |acc, f| kron(&acc, f))
}

/// Applies `f` to the eigenvalues of a symmetric matrix.
pub fn sym_fn(a: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = a.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    a.clone().singular_values().max()
}

pub fn inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::Argument("singular matrix in dense oracle".into()))
}

/// Dense matrix of a linear map given as a closure, column by column.
pub fn assemble(n: usize, apply: impl Fn(&[f64]) -> Vec<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = apply(&e);
        out.set_column(j, &DVector::from_vec(col));
        e[j] = 0.0;
    }
    out
}

fn eta(spec: &ProblemSpec, axis: usize) -> f64 {
    spec.kappas[axis] * spec.dt() / (2.0 * spec.h(axis).powf(spec.alphas[axis]))
}

fn stencil(spec: &ProblemSpec, axis: usize) -> Vec<f64> {
    (0..spec.n).map(|k| fcd_closed_form(spec.alphas[axis], k)).collect()
}

/// `H_α = H_{α_d} ⊗ ... ⊗ H_{α_1}`.
pub fn h_alpha(spec: &ProblemSpec) -> DMatrix<f64> {
    let f: Vec<_> = spec.alphas.iter().map(|&a| compact_matrix(a, spec.n)).collect();
    kron_axes(&f)
}

/// `Σ_i η_i (H ⊗ ... ⊗ G_i ⊗ ... ⊗ H)` where `G_i = axis_matrix(i)`.
fn sum_over_axes(spec: &ProblemSpec, axis_matrix: impl Fn(usize) -> DMatrix<f64>) -> DMatrix<f64> {
    let len = spec.n.pow(spec.d as u32);
    let mut out = DMatrix::zeros(len, len);
    for i in 0..spec.d {
        let factors: Vec<_> = (0..spec.d)
            .map(|l| if l == i { axis_matrix(i) } else { compact_matrix(spec.alphas[l], spec.n) })
            .collect();
        out += kron_axes(&factors) * eta(spec, i);
    }
    out
}

/// `S_α` with coefficients from the closed-form Gamma expression.
pub fn s_alpha(spec: &ProblemSpec) -> DMatrix<f64> {
    sum_over_axes(spec, |i| toeplitz_matrix(&stencil(spec, i)))
}

/// `τ(S_α)`.
pub fn tau_s_alpha(spec: &ProblemSpec) -> DMatrix<f64> {
    sum_over_axes(spec, |i| tau_matrix(&stencil(spec, i)))
}

pub fn e_matrix(spec: &ProblemSpec, m: usize) -> DMatrix<f64> {
    let t = spec.half_time(m);
    let e = spec.sample_interior(|x| (spec.e_fn)(x, t));
    DMatrix::from_diagonal(&DVector::from_vec(e))
}

/// `Ã^{(m)} = E^{(m+1/2)} + H_α^{-1} S_α`.
pub fn a_tilde(spec: &ProblemSpec, m: usize) -> Result<DMatrix<f64>> {
    Ok(e_matrix(spec, m) + inverse(&h_alpha(spec))? * s_alpha(spec))
}

/// `P_α = ē I + H_α^{-1/2} τ(S_α) H_α^{-1/2}`.
pub fn preconditioner(spec: &ProblemSpec, e_bar: f64) -> DMatrix<f64> {
    let h_inv_sqrt = sym_fn(&h_alpha(spec), |l| 1.0 / l.sqrt());
    let len = h_inv_sqrt.nrows();
    DMatrix::identity(len, len) * e_bar + &h_inv_sqrt * tau_s_alpha(spec) * &h_inv_sqrt
}

fn f_at(spec: &ProblemSpec, idx: &[usize], t: f64) -> Result<f64> {
    let x: Vec<f64> = idx.iter().enumerate().map(|(a, &j)| spec.node(a, j)).collect();
    spec.source_value(&x, t)
}

/// `[f(x_0), 0, ..., 0, f(x_{N+1})]` along axis 1 with the other indices fixed.
fn ends_row(spec: &ProblemSpec, rest: &[usize], t: f64) -> Result<Vec<f64>> {
    let n = spec.n;
    let mut row = vec![0.0; n];
    let mut idx = vec![0];
    idx.extend_from_slice(rest);
    row[0] += f_at(spec, &idx, t)?;
    idx[0] = n + 1;
    row[n - 1] += f_at(spec, &idx, t)?;
    Ok(row)
}

/// `[top; 0; ...; 0; bottom]` with `N` blocks.
fn stack_ends(top: DVector<f64>, bottom: DVector<f64>, blocks: usize) -> DVector<f64> {
    let b = top.len();
    let mut v = DVector::zeros(b * blocks);
    v.rows_mut(0, b).copy_from(&top);
    let mut tail = v.rows_mut(b * (blocks - 1), b);
    tail += bottom;
    v
}

/// `F^{(m+1/2)}` transcribed term by term from the explicit per-dimension
/// boundary formulas (d = 1, 2, 3). Needs `N >= 2`.
pub fn expanded_source_vector(spec: &ProblemSpec, m: usize) -> Result<DVector<f64>> {
    let n = spec.n;
    if n < 2 {
        return Err(Error::Argument("expanded source formulas need N >= 2".into()));
    }
    let t = spec.half_time(m);
    let interior = DVector::from_vec(
        (0..n.pow(spec.d as u32))
            .map(|flat| {
                let idx = spec.shape().unravel(flat);
                let idx: Vec<usize> = idx[..spec.d].iter().map(|j| j + 1).collect();
                f_at(spec, &idx, t)
            })
            .collect::<Result<Vec<_>>>()?,
    );
    let id = DMatrix::<f64>::identity(n, n);
    let a: Vec<f64> = spec.alphas.clone();
    let h: Vec<DMatrix<f64>> = a.iter().map(|&al| compact_matrix(al, n)).collect();
    let mut out = h_alpha(spec) * interior;
    match spec.d {
        1 => {
            let f0 = DVector::from_vec(ends_row(spec, &[], t)?);
            out += f0 * (a[0] / 24.0);
        }
        2 => {
            let mut f1 = Vec::with_capacity(n * n);
            for j2 in 1..=n {
                f1.extend(ends_row(spec, &[j2], t)?);
            }
            let row = |j2: usize| -> Result<DVector<f64>> {
                Ok(DVector::from_vec((1..=n).map(|j1| f_at(spec, &[j1, j2], t)).collect::<Result<Vec<_>>>()?))
            };
            let (g1, g2) = (row(0)?, row(n + 1)?);
            let g3 = DVector::from_vec(ends_row(spec, &[0], t)?);
            let g4 = DVector::from_vec(ends_row(spec, &[n + 1], t)?);
            out += kron(&h[1], &(&id * (a[0] / 24.0))) * DVector::from_vec(f1);
            out += stack_ends(&h[0] * g1, &h[0] * g2, n) * (a[1] / 24.0);
            out += stack_ends(g3, g4, n) * (a[0] * a[1] / 576.0);
        }
        3 => {
            let c1 = &id * (a[0] / 24.0);
            let c2 = &id * (a[1] / 24.0);
            let mut f2 = Vec::new();
            let mut g7 = Vec::new();
            let mut fp = Vec::new();
            for j3 in 1..=n {
                for j2 in 1..=n {
                    f2.extend(ends_row(spec, &[j2, j3], t)?);
                }
                let lo = ends_row(spec, &[0, j3], t)?;
                let hi = ends_row(spec, &[n + 1, j3], t)?;
                g7.extend(stack_ends(DVector::from_vec(lo), DVector::from_vec(hi), n).iter());
                let face = |j2: usize| -> Result<DVector<f64>> {
                    Ok(DVector::from_vec((1..=n).map(|j1| f_at(spec, &[j1, j2, j3], t)).collect::<Result<Vec<_>>>()?))
                };
                fp.extend(stack_ends(face(0)?, face(n + 1)?, n).iter());
            }
            // x_3 faces, x_3 edges with x_1 / x_2 ends, corners
            let face3 = |j3: usize| -> Result<DVector<f64>> {
                let mut v = Vec::with_capacity(n * n);
                for j2 in 1..=n {
                    for j1 in 1..=n {
                        v.push(f_at(spec, &[j1, j2, j3], t)?);
                    }
                }
                Ok(DVector::from_vec(v))
            };
            let edge13 = |j3: usize| -> Result<DVector<f64>> {
                let mut v = Vec::with_capacity(n * n);
                for j2 in 1..=n {
                    v.extend(ends_row(spec, &[j2, j3], t)?);
                }
                Ok(DVector::from_vec(v))
            };
            let edge23 = |j3: usize| -> Result<DVector<f64>> {
                let row = |j2: usize| -> Result<DVector<f64>> {
                    Ok(DVector::from_vec((1..=n).map(|j1| f_at(spec, &[j1, j2, j3], t)).collect::<Result<Vec<_>>>()?))
                };
                Ok(stack_ends(row(0)?, row(n + 1)?, n))
            };
            let corners = |j3: usize| -> Result<DVector<f64>> {
                let lo = DVector::from_vec(ends_row(spec, &[0, j3], t)?);
                let hi = DVector::from_vec(ends_row(spec, &[n + 1, j3], t)?);
                Ok(stack_ends(lo, hi, n))
            };
            let (g5, g6) = (face3(0)?, face3(n + 1)?);
            let (g8, g9) = (edge13(0)?, edge13(n + 1)?);
            let (g10, g11) = (edge23(0)?, edge23(n + 1)?);
            let gp = stack_ends(corners(0)?, corners(n + 1)?, n);

            let h21 = kron(&h[1], &h[0]);
            let h2c1 = kron(&h[1], &c1);
            let c2h1 = kron(&c2, &h[0]);
            let s3 = a[2] / 24.0;
            out += kron(&kron(&h[2], &h[1]), &c1) * DVector::from_vec(f2);
            out += kron(&kron(&h[2], &c2), &h[0]) * DVector::from_vec(fp);
            out += stack_ends(&h21 * g5, &h21 * g6, n) * s3;
            out += kron(&kron(&h[2], &c2), &c1) * DVector::from_vec(g7);
            out += stack_ends(&h2c1 * g8, &h2c1 * g9, n) * s3;
            out += stack_ends(&c2h1 * g10, &c2h1 * g11, n) * s3;
            out += gp * (a[2] * a[1] * a[0] / 24f64.powi(3));
        }
        d => return Err(Error::Config(format!("dimension {d} not supported"))),
    }
    Ok(out)
}
