//! `rsfde`: solve, tabulate, dump spectra and validate from the command line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{AlphaList, FileConfig, OneOrMany, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "rsfde", version, about = "Tau-preconditioned GMRES for Riesz space fractional diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// March one problem to t = 1 and report errors and iteration counts.
    Solve(Common),
    /// Sweep (M, N, alpha) and write one CSV row per point for both modes.
    Table(Common),
    /// Write the eigenvalues of the plain and preconditioned matrices as CSV.
    Spectrum(Common),
    /// Run the validation suite; exits nonzero if any check fails.
    Validate(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML file with run settings; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// ex1, ex2, ex3 or none (custom problem built from kappa, amplitude, e_scale).
    #[arg(long)]
    preset: Option<String>,
    /// Time steps; a comma list sweeps in `table`.
    #[arg(long = "M", value_delimiter = ',')]
    m: Vec<usize>,
    /// Interior points per axis (N+1 = 1/h); a comma list sweeps in `table`.
    #[arg(long = "N", value_delimiter = ',')]
    n: Vec<usize>,
    /// Fractional orders, one per axis, comma separated. Repeat to sweep tuples.
    #[arg(long)]
    alpha: Vec<String>,
    /// Diffusion coefficients, one per axis.
    #[arg(long, value_delimiter = ',')]
    kappa: Vec<f64>,
    /// Preconditioning: none, one or two.
    #[arg(long)]
    mode: Option<String>,
    /// GMRES relative residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    restart: Option<usize>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    verbose: bool,
    /// Print "-" instead of measured wall times so output is byte-stable.
    #[arg(long)]
    no_cpu: bool,
    /// Time level m at which `spectrum` assembles the matrices.
    #[arg(long)]
    time_level: Option<usize>,
    /// Random directions for the numerical-range probe in `validate`.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Flip the sign of s_1 before the coefficient check (negative test).
    #[arg(long)]
    flip_s1: bool,
}

impl Common {
    fn overrides(&self) -> anyhow::Result<FileConfig> {
        let alpha = if self.alpha.is_empty() {
            None
        } else {
            let tuples = self
                .alpha
                .iter()
                .map(|s| s.split(',').map(|v| v.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| anyhow::anyhow!("bad --alpha value: {e}"))?;
            Some(AlphaList::Tuples(tuples))
        };
        let list = |v: &Vec<usize>| (!v.is_empty()).then(|| OneOrMany::Many(v.clone()));
        Ok(FileConfig {
            preset: self.preset.clone(),
            m: list(&self.m),
            n: list(&self.n),
            alpha,
            kappa: (!self.kappa.is_empty()).then(|| self.kappa.clone()),
            mode: self.mode.clone(),
            tol: self.tol,
            max_iter: self.max_iter,
            restart: self.restart,
            out: self.out.clone(),
            verbose: self.verbose.then_some(true),
            no_cpu: self.no_cpu.then_some(true),
            time_level: self.time_level,
            samples: self.samples,
            seed: self.seed,
            flip_s1: self.flip_s1.then_some(true),
            ..Default::default()
        })
    }

    fn resolve(&self) -> anyhow::Result<(RunConfig, FileConfig)> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let merged = file.merge(self.overrides()?);
        Ok((RunConfig::resolve(merged.clone())?, merged))
    }
}

fn emit(cfg: &RunConfig, text: &str) -> anyhow::Result<()> {
    match &cfg.out {
        Some(p) => std::fs::write(p, text).map_err(|e| anyhow::anyhow!("writing {}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Solve(c) => {
            let (cfg, _) = c.resolve()?;
            let (text, csv) = commands::run_solve(&cfg)?;
            match &cfg.out {
                Some(p) => {
                    print!("{text}");
                    std::fs::write(p, csv).map_err(|e| anyhow::anyhow!("writing {}: {e}", p.display()))?;
                }
                None => print!("{text}"),
            }
            Ok(true)
        }
        Command::Table(c) => {
            let (cfg, _) = c.resolve()?;
            emit(&cfg, &commands::run_table(&cfg)?)?;
            Ok(true)
        }
        Command::Spectrum(c) => {
            let (cfg, _) = c.resolve()?;
            emit(&cfg, &commands::run_spectrum(&cfg)?)?;
            Ok(true)
        }
        Command::Validate(c) => {
            let (cfg, merged) = c.resolve()?;
            let (text, ok) = commands::run_validate(&cfg, merged.n.is_some(), merged.m.is_some())?;
            emit(&cfg, &text)?;
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
