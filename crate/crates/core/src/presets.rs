//! The three benchmark problems on the unit box over `[0, 1]`, each driven by
//! the separable bump `A e^{-t} Π x_i⁴(1 - x_i)⁴`.

use std::sync::Arc;

use crate::discretization::{ManufacturedSolution, ProblemSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// d = 1, κ = 100, e = (x² + e^{-t})/50, A = 100.
    Ex1,
    /// d = 2, κ = (100, 100), e = (x₁² + x₂² + e^{-t})/100, A = 10⁴.
    Ex2,
    /// d = 3, κ = (100, 85, 103), e = (x₁² + x₂² + x₃² + e^{-t})/100, A = 10⁸.
    Ex3,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ex1" => Ok(Self::Ex1),
            "ex2" => Ok(Self::Ex2),
            "ex3" => Ok(Self::Ex3),
            other => Err(Error::Config(format!("unknown preset '{other}' (expected ex1, ex2 or ex3)"))),
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Ex1 => "ex1",
            Self::Ex2 => "ex2",
            Self::Ex3 => "ex3",
        })
    }
}

impl Preset {
    pub fn dimension(self) -> usize {
        match self {
            Self::Ex1 => 1,
            Self::Ex2 => 2,
            Self::Ex3 => 3,
        }
    }

    pub fn kappas(self) -> Vec<f64> {
        match self {
            Self::Ex1 => vec![100.0],
            Self::Ex2 => vec![100.0, 100.0],
            Self::Ex3 => vec![100.0, 85.0, 103.0],
        }
    }

    pub fn amplitude(self) -> f64 {
        match self {
            Self::Ex1 => 1e2,
            Self::Ex2 => 1e4,
            Self::Ex3 => 1e8,
        }
    }

    /// Default α-tuple.
    pub fn default_alphas(self) -> Vec<f64> {
        match self {
            Self::Ex1 => vec![1.5],
            Self::Ex2 => vec![1.5, 1.7],
            Self::Ex3 => vec![1.3, 1.5, 1.7],
        }
    }

    /// Builds the problem with `n` interior points per axis and `m` time steps.
    pub fn spec(self, alphas: &[f64], n: usize, m: usize) -> Result<ProblemSpec> {
        if alphas.len() != self.dimension() {
            return Err(Error::Config(format!(
                "preset {self} needs {} fractional orders, got {}",
                self.dimension(),
                alphas.len()
            )));
        }
        let scale = if self == Self::Ex1 { 50.0 } else { 100.0 };
        let e_fn = Arc::new(move |x: &[f64], t: f64| (x.iter().map(|v| v * v).sum::<f64>() + (-t).exp()) / scale);
        let mut spec = ProblemSpec::manufactured(
            alphas.to_vec(),
            self.kappas(),
            n,
            m,
            e_fn,
            ManufacturedSolution::bump(self.amplitude()),
        )?;
        spec.label = self.to_string();
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameters() {
        let s = Preset::Ex3.spec(&[1.5, 1.7, 1.9], 7, 4).unwrap();
        assert_eq!(s.kappas, vec![100.0, 85.0, 103.0]);
        assert!(((s.e_fn)(&[0.5, 0.5, 0.5], 0.0) - 0.0175).abs() < 1e-15);
        let s1 = Preset::Ex1.spec(&[1.5], 15, 4).unwrap();
        assert!(((s1.e_fn)(&[1.0], 0.0) - 0.04).abs() < 1e-15);
        let u = s1.exact.as_ref().unwrap();
        assert!((u(&[0.5], 0.0) - 100.0 / 256.0).abs() < 1e-12);
        assert!(Preset::Ex2.spec(&[1.5], 7, 4).is_err());
        assert!("ex4".parse::<Preset>().is_err());
    }
}
