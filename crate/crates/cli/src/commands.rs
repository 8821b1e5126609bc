use std::fmt::Write as _;

use anyhow::{bail, Context};
use rsfde::solver::spectrum_dump;
use rsfde::validation::{run_suite, SuiteConfig};
use rsfde::{time_march, PrecondMode, SolveConfig, SolveReport};

use crate::config::RunConfig;

pub const TABLE_HEADER: &str = "M,Nplus1,alphas,error,cpu_one_sided,iters_one_sided,cpu_two_sided,iters_two_sided";

fn march(cfg: &RunConfig, m: usize, n: usize, alphas: &[f64], mode: PrecondMode) -> anyhow::Result<SolveReport> {
    let spec = cfg.build_spec(m, n, alphas)?;
    let solve_cfg = SolveConfig {
        gmres: cfg.gmres(spec.d, mode)?,
        ..SolveConfig::for_spec(&spec)
    };
    Ok(time_march(&spec, &solve_cfg)?)
}

fn format_alphas(alphas: &[f64]) -> String {
    alphas.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

fn cpu(cfg: &RunConfig, r: &SolveReport) -> String {
    if cfg.no_cpu {
        "-".into()
    } else {
        format!("{:.3}", r.wall_seconds())
    }
}

/// One time march; returns the text summary and an optional per-step CSV.
pub fn run_solve(cfg: &RunConfig) -> anyhow::Result<(String, String)> {
    let (m, n, alphas) = cfg.single()?;
    let report = march(cfg, m, n, &alphas, cfg.mode)?;

    let mut text = String::new();
    writeln!(text, "{}", report.summary)?;
    writeln!(text, "mode: {}", report.mode)?;
    writeln!(
        text,
        "coefficient bounds: min {:.6e}, max {:.6e}, mean {:.6e}",
        report.bounds.e_check, report.bounds.e_hat, report.bounds.e_bar
    )?;
    writeln!(text, "mean iterations: {:.1}", report.mean_iterations)?;
    if let (Some(l2), Some(grid), Some(max)) = (report.error_l2, report.error_l2_grid, report.error_max) {
        writeln!(text, "error (Euclidean): {l2:.3e}")?;
        writeln!(text, "error (grid-weighted): {grid:.3e}")?;
        writeln!(text, "error (max): {max:.3e}")?;
    }
    if !cfg.no_cpu {
        writeln!(text, "wall time: {:.3} s (with setup {:.3} s)", report.wall_seconds(), report.wall_inclusive.as_secs_f64())?;
    }
    if cfg.verbose {
        for s in &report.per_step {
            writeln!(text, "  step {:>6}: {:>3} iterations, relative residual {:.3e}", s.step, s.iterations, s.relative_residual)?;
        }
    }

    let mut csv = String::from("step,iterations,relative_residual,converged\n");
    for s in &report.per_step {
        writeln!(csv, "{},{},{:e},{}", s.step, s.iterations, s.relative_residual, s.converged)?;
    }

    if let Some(step) = report.failed_step {
        writeln!(text, "FAILED: step {step} did not converge")?;
        print!("{text}");
        report.ensure_converged()?;
    }
    Ok((text, csv))
}

/// One CSV row per `(α, M, N)` sweep point, both preconditioned modes.
pub fn run_table(cfg: &RunConfig) -> anyhow::Result<String> {
    let mut out = format!("{TABLE_HEADER}\n");
    // reject a bad sweep before spending time on any row
    for alphas in &cfg.alphas {
        for &m in &cfg.ms {
            for &n in &cfg.ns {
                let spec = cfg.build_spec(m, n, alphas).with_context(|| format!("sweep point M={m}, N={n}, alpha={alphas:?}"))?;
                cfg.gmres(spec.d, PrecondMode::OneSided)?;
            }
        }
    }
    for alphas in &cfg.alphas {
        for &m in &cfg.ms {
            for &n in &cfg.ns {
                let one = march(cfg, m, n, alphas, PrecondMode::OneSided)?;
                one.ensure_converged()?;
                let two = march(cfg, m, n, alphas, PrecondMode::TwoSided)?;
                two.ensure_converged()?;
                let error = one.error_l2.map_or_else(|| "-".into(), |e| format!("{e:.2e}"));
                writeln!(
                    out,
                    "{m},{},{},{error},{},{:.1},{},{:.1}",
                    n + 1,
                    format_alphas(alphas),
                    cpu(cfg, &one),
                    one.mean_iterations,
                    cpu(cfg, &two),
                    two.mean_iterations
                )?;
                if cfg.verbose {
                    eprintln!("done M={m} N+1={} alpha={}", n + 1, format_alphas(alphas));
                }
            }
        }
    }
    Ok(out)
}

/// Eigenvalues of `Ã` and `P⁻¹Ã` at one time level.
pub fn run_spectrum(cfg: &RunConfig) -> anyhow::Result<String> {
    let (m, n, alphas) = cfg.single()?;
    let spec = cfg.build_spec(m, n, &alphas)?;
    let dump = spectrum_dump(&spec, cfg.time_level)?;
    let mut out = String::from("matrix_tag,re,im\n");
    for (tag, ev) in [("a_tilde", &dump.a_tilde), ("preconditioned", &dump.preconditioned)] {
        for (re, im) in ev {
            writeln!(out, "{tag},{re:e},{im:e}")?;
        }
    }
    Ok(out)
}

/// The validation suite; returns the report and whether every check passed.
pub fn run_validate(cfg: &RunConfig, n_given: bool, m_given: bool) -> anyhow::Result<(String, bool)> {
    let mut suite = SuiteConfig {
        flip_s1: cfg.flip_s1,
        ..SuiteConfig::default()
    };
    if n_given {
        suite.ex1_n = cfg.single()?.1;
    }
    if m_given {
        suite.ex1_m = cfg.single()?.0;
    }
    if let Some(s) = cfg.samples {
        suite.probe_samples = s;
    }
    if let Some(s) = cfg.seed {
        suite.seed = s;
    }
    if suite.ex1_n == 0 || suite.ex1_m == 0 {
        bail!("validation sizes must be positive");
    }
    let report = run_suite(&suite)?;
    Ok((report.render(cfg.verbose), report.all_passed()))
}
