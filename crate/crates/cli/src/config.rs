//! Run configuration: a flat TOML file, overridden field by field by flags.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use rsfde::presets::Preset;
use rsfde::{GmresConfig, ManufacturedSolution, PrecondMode, ProblemSpec};
use serde::Deserialize;

/// A scalar or a list of scalars.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn into_vec(self) -> Vec<T> {
        match self {
            Self::One(v) => vec![v],
            Self::Many(v) => v,
        }
    }
}

/// A single α-tuple or a list of them.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AlphaList {
    Scalar(f64),
    Tuple(Vec<f64>),
    Tuples(Vec<Vec<f64>>),
}

impl AlphaList {
    pub fn into_tuples(self) -> Vec<Vec<f64>> {
        match self {
            Self::Scalar(a) => vec![vec![a]],
            Self::Tuple(t) => vec![t],
            Self::Tuples(ts) => ts,
        }
    }
}

/// Everything a run can be configured with. Every field is optional in the
/// file; missing values fall back to the preset defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub preset: Option<String>,
    #[serde(rename = "M")]
    pub m: Option<OneOrMany<usize>>,
    #[serde(rename = "N")]
    pub n: Option<OneOrMany<usize>>,
    pub alpha: Option<AlphaList>,
    pub kappa: Option<Vec<f64>>,
    /// Amplitude of the manufactured bump (custom problems).
    pub amplitude: Option<f64>,
    /// Divisor in `e = (Σ x_i² + e^{-t}) / e_scale` (custom problems).
    pub e_scale: Option<f64>,
    pub mode: Option<String>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub restart: Option<usize>,
    pub out: Option<PathBuf>,
    pub verbose: Option<bool>,
    pub no_cpu: Option<bool>,
    pub time_level: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub flip_s1: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merge(self, over: FileConfig) -> FileConfig {
        macro_rules! pick {
            ($($f:ident),*) => { FileConfig { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            preset, m, n, alpha, kappa, amplitude, e_scale, mode, tol, max_iter, restart, out, verbose, no_cpu,
            time_level, samples, seed, flip_s1
        )
    }
}

/// The problem family a run draws from.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Preset(Preset),
    /// Bump-driven problem on the unit box with user-chosen κ, amplitude and
    /// coefficient scale.
    Custom,
}

/// Resolved configuration with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub family: Family,
    pub ms: Vec<usize>,
    pub ns: Vec<usize>,
    pub alphas: Vec<Vec<f64>>,
    pub kappa: Option<Vec<f64>>,
    pub amplitude: Option<f64>,
    pub e_scale: Option<f64>,
    pub mode: PrecondMode,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub restart: Option<usize>,
    pub out: Option<PathBuf>,
    pub verbose: bool,
    pub no_cpu: bool,
    pub time_level: usize,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub flip_s1: bool,
}

impl RunConfig {
    pub fn resolve(file: FileConfig) -> anyhow::Result<Self> {
        let family = match file.preset.as_deref().unwrap_or("ex1") {
            "none" => Family::Custom,
            p => Family::Preset(p.parse()?),
        };
        let d_default = match &family {
            Family::Preset(p) => p.default_alphas(),
            Family::Custom => match &file.kappa {
                Some(k) => vec![1.5; k.len()],
                None => bail!("preset 'none' needs kappa = [..] to fix the dimension"),
            },
        };
        let mode = match file.mode.as_deref() {
            Some(m) => m.parse()?,
            None => PrecondMode::OneSided,
        };
        Ok(Self {
            family,
            ms: file.m.map(OneOrMany::into_vec).unwrap_or_else(|| vec![1 << 10]),
            ns: file.n.map(OneOrMany::into_vec).unwrap_or_else(|| vec![15]),
            alphas: file.alpha.map(AlphaList::into_tuples).unwrap_or_else(|| vec![d_default]),
            kappa: file.kappa,
            amplitude: file.amplitude,
            e_scale: file.e_scale,
            mode,
            tol: file.tol,
            max_iter: file.max_iter,
            restart: file.restart,
            out: file.out,
            verbose: file.verbose.unwrap_or(false),
            no_cpu: file.no_cpu.unwrap_or(false),
            time_level: file.time_level.unwrap_or(0),
            samples: file.samples,
            seed: file.seed,
            flip_s1: file.flip_s1.unwrap_or(false),
        })
    }

    /// The problem for one `(M, N, α)` point of the sweep.
    pub fn build_spec(&self, m: usize, n: usize, alphas: &[f64]) -> anyhow::Result<ProblemSpec> {
        let spec = match &self.family {
            Family::Preset(p) => {
                let mut spec = p.spec(alphas, n, m)?;
                if let Some(k) = &self.kappa {
                    spec.kappas = k.clone();
                }
                spec
            }
            Family::Custom => {
                let kappas = self.kappa.clone().unwrap_or_default();
                let scale = self.e_scale.unwrap_or(100.0);
                if !(scale > 0.0) {
                    bail!("e_scale must be positive, got {scale}");
                }
                let e_fn = Arc::new(move |x: &[f64], t: f64| (x.iter().map(|v| v * v).sum::<f64>() + (-t).exp()) / scale);
                let solution = ManufacturedSolution::bump(self.amplitude.unwrap_or(1.0));
                let mut spec = ProblemSpec::manufactured(alphas.to_vec(), kappas, n, m, e_fn, solution)?;
                spec.label = "custom".into();
                spec
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    /// GMRES settings for a problem of dimension `d` in the given mode.
    pub fn gmres(&self, d: usize, mode: PrecondMode) -> anyhow::Result<GmresConfig> {
        let mut cfg = GmresConfig::for_dimension(d);
        cfg.mode = mode;
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if let Some(k) = self.max_iter {
            cfg.max_iter = k;
        }
        cfg.restart = self.restart.or(cfg.restart);
        cfg.validate()?;
        Ok(cfg)
    }

    /// The first sweep point, used by single-run subcommands.
    pub fn single(&self) -> anyhow::Result<(usize, usize, Vec<f64>)> {
        match (self.ms.first(), self.ns.first(), self.alphas.first()) {
            (Some(m), Some(n), Some(a)) => Ok((*m, *n, a.clone())),
            _ => bail!("M, N and alpha must each have at least one value"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalars_and_lists_both_parse() {
        let f = FileConfig::parse("preset = \"ex2\"\nM = 64\nN = [7, 15]\nalpha = [[1.5, 1.7], [1.7, 1.9]]\n").unwrap();
        let c = RunConfig::resolve(f).unwrap();
        assert_eq!(c.ms, vec![64]);
        assert_eq!(c.ns, vec![7, 15]);
        assert_eq!(c.alphas.len(), 2);
        assert_eq!(c.family, Family::Preset(Preset::Ex2));
    }

    #[test]
    fn single_tuple_alpha() {
        let c = RunConfig::resolve(FileConfig::parse("alpha = [1.9]").unwrap()).unwrap();
        assert_eq!(c.alphas, vec![vec![1.9]]);
        let c = RunConfig::resolve(FileConfig::parse("alpha = 1.3").unwrap()).unwrap();
        assert_eq!(c.alphas, vec![vec![1.3]]);
    }

    #[test]
    fn flags_override_file() {
        let file = FileConfig::parse("tol = 1e-6\nmode = \"two\"\nM = 32").unwrap();
        let flags = FileConfig {
            m: Some(OneOrMany::One(8)),
            ..Default::default()
        };
        let c = RunConfig::resolve(file.merge(flags)).unwrap();
        assert_eq!(c.ms, vec![8]);
        assert_eq!(c.tol, Some(1e-6));
        assert_eq!(c.mode, PrecondMode::TwoSided);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(FileConfig::parse("colour = 3").is_err());
    }

    #[test]
    fn custom_family_needs_kappa() {
        assert!(RunConfig::resolve(FileConfig::parse("preset = \"none\"").unwrap()).is_err());
        let c = RunConfig::resolve(FileConfig::parse("preset = \"none\"\nkappa = [1.0, 2.0]").unwrap()).unwrap();
        assert_eq!(c.alphas, vec![vec![1.5, 1.5]]);
        let spec = c.build_spec(4, 3, &[1.5, 1.5]).unwrap();
        assert_eq!(spec.d, 2);
    }

    #[test]
    fn zero_kappa_refused() {
        let c = RunConfig::resolve(FileConfig::parse("kappa = [0.0]").unwrap()).unwrap();
        assert!(c.build_spec(4, 3, &[1.5]).is_err());
    }
}
