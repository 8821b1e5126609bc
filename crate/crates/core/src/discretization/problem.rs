use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::transforms::GridShape;

use super::manufactured::ManufacturedSolution;

/// Scalar field over space and time, `g(x, t)`; `x` has one entry per axis.
pub type SpaceTimeFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
/// Scalar field over space.
pub type SpaceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Where the forcing term comes from.
#[derive(Clone)]
pub enum Source {
    /// Forcing derived analytically from a separable exact solution.
    Manufactured(ManufacturedSolution),
    /// An explicit `f(x, t)`, evaluated on boundary nodes as well.
    Explicit(SpaceTimeFn),
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Manufactured(m) => f.debug_tuple("Manufactured").field(m).finish(),
            Source::Explicit(_) => f.write_str("Explicit(..)"),
        }
    }
}

/// Full definition of one Riesz space fractional diffusion problem
/// `e ∂_t u = Σ κ_i ∂^{α_i} u + f` on a box with homogeneous Dirichlet data.
#[derive(Clone)]
pub struct ProblemSpec {
    pub d: usize,
    pub domain: Vec<(f64, f64)>,
    pub alphas: Vec<f64>,
    pub kappas: Vec<f64>,
    /// Interior points per axis.
    pub n: usize,
    /// Number of time steps.
    pub m: usize,
    pub t_final: f64,
    pub e_fn: SpaceTimeFn,
    pub source: Option<Source>,
    pub psi: SpaceFn,
    pub exact: Option<SpaceTimeFn>,
    pub label: String,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("label", &self.label)
            .field("d", &self.d)
            .field("alphas", &self.alphas)
            .field("kappas", &self.kappas)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("t_final", &self.t_final)
            .field("source", &self.source)
            .finish()
    }
}

impl ProblemSpec {
    /// A problem on the unit box `(0,1)^d` over `[0, 1]` driven by a
    /// manufactured solution. Initial data and the exact solution are taken
    /// from `solution`.
    pub fn manufactured(
        alphas: Vec<f64>,
        kappas: Vec<f64>,
        n: usize,
        m: usize,
        e_fn: SpaceTimeFn,
        solution: ManufacturedSolution,
    ) -> Result<Self> {
        let d = alphas.len();
        let psi_sol = solution.clone();
        let exact_sol = solution.clone();
        let spec = Self {
            d,
            domain: vec![(0.0, 1.0); d],
            alphas,
            kappas,
            n,
            m,
            t_final: 1.0,
            e_fn,
            source: Some(Source::Manufactured(solution)),
            psi: Arc::new(move |x| psi_sol.value(x, 0.0)),
            exact: Some(Arc::new(move |x, t| exact_sol.value(x, t))),
            label: "manufactured".into(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.d) {
            return Err(Error::Config(format!("dimension {} not in 1..=3", self.d)));
        }
        if self.domain.len() != self.d || self.alphas.len() != self.d || self.kappas.len() != self.d {
            return Err(Error::Config(format!(
                "expected {} entries for domain/alphas/kappas, got {}/{}/{}",
                self.d,
                self.domain.len(),
                self.alphas.len(),
                self.kappas.len()
            )));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 1.0 && **a < 2.0)) {
            return Err(Error::Domain(format!("fractional order {a} not in (1, 2)")));
        }
        if let Some(k) = self.kappas.iter().find(|k| !(**k > 0.0) || !k.is_finite()) {
            return Err(Error::Domain(format!("diffusion coefficient {k} must be positive")));
        }
        if let Some((a, b)) = self.domain.iter().find(|(a, b)| !(b > a)) {
            return Err(Error::Domain(format!("empty interval ({a}, {b})")));
        }
        if self.n == 0 || self.m == 0 {
            return Err(Error::Config("N and M must be positive".into()));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::Domain(format!("final time {} must be positive", self.t_final)));
        }
        if matches!(self.source, Some(Source::Manufactured(_))) && self.domain.iter().any(|&(a, b)| (a, b) != (0.0, 1.0)) {
            return Err(Error::UnsupportedSource(
                "manufactured forcing is derived on the unit box only".into(),
            ));
        }
        Ok(())
    }

    pub fn shape(&self) -> GridShape {
        GridShape::new(self.n, self.d)
    }

    /// Mesh width `h_i = (b_i - a_i)/(N+1)`.
    pub fn h(&self, axis: usize) -> f64 {
        let (a, b) = self.domain[axis];
        (b - a) / (self.n as f64 + 1.0)
    }

    /// Time step `T / M`.
    pub fn dt(&self) -> f64 {
        self.t_final / self.m as f64
    }

    /// Coordinate of node `j` (`0..=N+1`) along `axis`.
    pub fn node(&self, axis: usize, j: usize) -> f64 {
        self.domain[axis].0 + j as f64 * self.h(axis)
    }

    /// Time `t_{m+1/2}`.
    pub fn half_time(&self, m: usize) -> f64 {
        (m as f64 + 0.5) * self.dt()
    }

    /// Coordinates of interior grid point `flat` (lexicographic, axis 1 fastest).
    pub fn interior_point(&self, flat: usize) -> [f64; 3] {
        let idx = self.shape().unravel(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.d {
            x[axis] = self.node(axis, idx[axis] + 1);
        }
        x
    }

    /// Samples `g` on the interior grid.
    pub fn sample_interior(&self, g: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.shape().len())
            .map(|flat| {
                let x = self.interior_point(flat);
                g(&x[..self.d])
            })
            .collect()
    }

    /// Evaluates the forcing term at `(x, t)`.
    pub fn source_value(&self, x: &[f64], t: f64) -> Result<f64> {
        match &self.source {
            Some(Source::Explicit(f)) => Ok(f(x, t)),
            Some(Source::Manufactured(sol)) => Ok(sol.source(self, x, t)),
            None => Err(Error::Config("problem has no source term".into())),
        }
    }

    pub fn summary(&self) -> String {
        let fmt_list = |v: &[f64]| v.iter().map(|a| format!("{a}")).collect::<Vec<_>>().join(";");
        format!(
            "{} d={} alphas={} kappas={} N={} M={} T={}",
            self.label,
            self.d,
            fmt_list(&self.alphas),
            fmt_list(&self.kappas),
            self.n,
            self.m,
            self.t_final
        )
    }
}
