//! Sampling the numerical range of the two-sided preconditioned matrix
//! `Ă = P^{-1/2} Ã P^{-1/2}`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::discretization::ProblemSpec;
use crate::error::{Error, Result};
use crate::preconditioner::CoefficientBounds;
use crate::solver::{assemble_a_tilde, assemble_precond_power, setup, sorted_eigenvalues, DENSE_CAP};

use super::bounds::envelope;

/// How a probe direction was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Normalised complex Gaussian vector, numbered from 0.
    Random(usize),
    /// Extreme eigenvector of `Re(e^{-iφ} Ă)`; these trace the boundary of the range.
    Boundary { angle_index: usize, top: bool },
    /// Eigenvector of `Ă`, whose Rayleigh quotient is the eigenvalue.
    Eigen(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub direction: Direction,
    pub value: Complex64,
}

#[derive(Debug, Clone)]
pub struct RangeProbe {
    pub samples: Vec<Sample>,
    /// Smallest sampled modulus, an upper estimate of `v(Ă)`.
    pub v_min: f64,
    /// Largest sampled modulus, a lower estimate of `r(Ă)`.
    pub r_max: f64,
    /// `arccos(v_min / r_max)`.
    pub theta: f64,
    pub bounds: CoefficientBounds,
    /// Envelope that every modulus must respect.
    pub envelope: (f64, f64),
}

impl RangeProbe {
    /// Samples whose modulus leaves the envelope.
    pub fn violations(&self) -> Vec<Sample> {
        let (lo, hi) = self.envelope;
        self.samples
            .iter()
            .filter(|s| {
                let m = s.value.norm();
                m < lo || m > hi
            })
            .copied()
            .collect()
    }

    /// Errors with the first offending direction, if any.
    pub fn check(&self) -> Result<()> {
        match self.violations().first() {
            None => Ok(()),
            Some(s) => Err(Error::Domain(format!(
                "Rayleigh quotient {:.6}{:+.6}i (|·| = {:.6}) from {:?} outside envelope [{:.6}, {:.6}]",
                s.value.re,
                s.value.im,
                s.value.norm(),
                s.direction,
                self.envelope.0,
                self.envelope.1
            ))),
        }
    }
}

/// Dense `Ă^{(m)}` together with the coefficient bounds it was built from.
pub fn two_sided_matrix(spec: &ProblemSpec, m: usize) -> Result<(DMatrix<f64>, CoefficientBounds)> {
    let len = spec.shape().len();
    if len > DENSE_CAP {
        return Err(Error::SizeCap { order: len, cap: DENSE_CAP });
    }
    let s = setup(spec, 1)?;
    let a = assemble_a_tilde(&s.ops, m)?;
    let p = assemble_precond_power(&s.precond, -0.5);
    Ok((&p * a * &p, s.bounds))
}

fn rayleigh(a: &DMatrix<Complex64>, y: &DVector<Complex64>) -> Complex64 {
    let ay = a * y;
    y.dotc(&ay) / y.dotc(y)
}

/// Number of rotation angles used to trace the range boundary.
const BOUNDARY_ANGLES: usize = 64;

/// Samples `y*Ăy / y*y` at `n_random` complex Gaussian directions plus
/// boundary and eigenvector directions, and compares every modulus with the
/// envelope derived from `ê`, `ě`.
pub fn numerical_range_probe(spec: &ProblemSpec, m: usize, n_random: usize, seed: u64) -> Result<RangeProbe> {
    let (a, bounds) = two_sided_matrix(spec, m)?;
    probe_matrix(&a, bounds, n_random, seed)
}

/// [`numerical_range_probe`] on a prebuilt two-sided matrix.
pub fn probe_matrix(a: &DMatrix<f64>, bounds: CoefficientBounds, n_random: usize, seed: u64) -> Result<RangeProbe> {
    let n = a.nrows();
    let ac = a.map(|v| Complex64::new(v, 0.0));
    let mut samples = Vec::with_capacity(n_random + 2 * BOUNDARY_ANGLES + n);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..n_random {
        let y = DVector::from_fn(n, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        });
        samples.push(Sample {
            direction: Direction::Random(k),
            value: rayleigh(&ac, &y),
        });
    }

    for j in 0..BOUNDARY_ANGLES {
        let phi = 2.0 * std::f64::consts::PI * j as f64 / BOUNDARY_ANGLES as f64;
        let rot = Complex64::from_polar(1.0, -phi);
        let rotated = ac.map(|v| v * rot);
        let herm = (&rotated + rotated.adjoint()).map(|v| v * 0.5);
        let eig = herm.symmetric_eigen();
        let (imin, imax) = eig.eigenvalues.iter().enumerate().fold((0, 0), |(lo, hi), (i, v)| {
            (
                if *v < eig.eigenvalues[lo] { i } else { lo },
                if *v > eig.eigenvalues[hi] { i } else { hi },
            )
        });
        for (idx, top) in [(imax, true), (imin, false)] {
            let y = eig.eigenvectors.column(idx).into_owned();
            samples.push(Sample {
                direction: Direction::Boundary { angle_index: j, top },
                value: rayleigh(&ac, &y),
            });
        }
    }

    for (k, (re, im)) in sorted_eigenvalues(a.clone())?.into_iter().enumerate() {
        samples.push(Sample {
            direction: Direction::Eigen(k),
            value: Complex64::new(re, im),
        });
    }

    let moduli = samples.iter().map(|s| s.value.norm());
    let v_min = moduli.clone().fold(f64::INFINITY, f64::min);
    let r_max = moduli.fold(0.0, f64::max);
    Ok(RangeProbe {
        samples,
        v_min,
        r_max,
        theta: (v_min / r_max).clamp(-1.0, 1.0).acos(),
        bounds,
        envelope: envelope(bounds.e_hat, bounds.e_check),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Preset;

    #[test]
    fn example_one_inside_envelope() {
        let spec = Preset::Ex1.spec(&[1.5], 15, 4096).unwrap();
        let probe = numerical_range_probe(&spec, 0, 2000, 11).unwrap();
        probe.check().unwrap();
        assert!(probe.v_min > 0.0 && probe.v_min <= probe.r_max);
        assert!(probe.theta > 0.0 && probe.theta < std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn injected_sample_is_reported() {
        let bounds = CoefficientBounds {
            e_bar: 1.0,
            e_hat: 1.0,
            e_check: 1.0,
        };
        // 3 I has every Rayleigh quotient equal to 3, beyond (4+√6)/4
        let a = DMatrix::identity(4, 4) * 3.0;
        let probe = probe_matrix(&a, bounds, 5, 1).unwrap();
        assert_eq!(probe.violations().len(), probe.samples.len());
        let msg = format!("{:?}", probe.check().unwrap_err());
        assert!(msg.contains("Random(0)"), "{msg}");
    }

    #[test]
    fn tau_only_constant_coefficient_has_real_quotients() {
        // Ă = I + positive semidefinite symmetric: quotients are real and >= 1
        let b = DMatrix::from_fn(6, 6, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let a = DMatrix::identity(6, 6) + &b * b.transpose() * 0.1;
        let bounds = CoefficientBounds {
            e_bar: 1.0,
            e_hat: 1.0,
            e_check: 1.0,
        };
        let probe = probe_matrix(&a, bounds, 200, 3).unwrap();
        for s in &probe.samples {
            assert!(s.value.im.abs() < 1e-12 && s.value.re >= 1.0 - 1e-12);
        }
        probe.check().unwrap();
    }
}
