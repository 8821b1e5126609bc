//! End-to-end validation run producing a plain-text report, one line per
//! check: name, bound, observed value, margin, verdict.

use std::fmt::Write as _;

use crate::error::Result;
use crate::krylov::GmresConfig;
use crate::presets::Preset;
use crate::preconditioner::{build_precond_for, compute_e_bar};
use crate::structured::{fcd_coefficients, FcdStencil};
use crate::Discretization;

use super::bounds::{residual_history_audit, rho_theta};
use super::checks;
use super::probe::numerical_range_probe;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub alphas: Vec<f64>,
    pub tau_sizes: Vec<usize>,
    /// Largest order for the dense Hankel-ratio check.
    pub hankel_max_n: usize,
    /// Largest order for the compact-operator spectrum check.
    pub compact_max_n: usize,
    pub probe_samples: usize,
    /// Interior points of the ex1 instance used by the solver checks.
    pub ex1_n: usize,
    /// Time steps of that instance.
    pub ex1_m: usize,
    pub seed: u64,
    /// Flip the sign of `s_1` before the coefficient check (negative test).
    pub flip_s1: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            alphas: vec![1.1, 1.3, 1.5, 1.7, 1.9],
            tau_sizes: vec![8, 16, 32, 64],
            hankel_max_n: 128,
            compact_max_n: 1024,
            probe_samples: 10_000,
            ex1_n: 15,
            ex1_m: 4096,
            seed: 2024,
            flip_s1: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub bound: String,
    pub observed: String,
    /// Positive when the check holds with room to spare.
    pub margin: f64,
    pub passed: bool,
    /// Per-case breakdown shown in verbose mode.
    pub details: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteReport {
    pub lines: Vec<CheckLine>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }

    pub fn failures(&self) -> Vec<&CheckLine> {
        self.lines.iter().filter(|l| !l.passed).collect()
    }

    pub fn render(&self, verbose: bool) -> String {
        let mut out = String::new();
        for l in &self.lines {
            let _ = writeln!(
                out,
                "{:<28} bound: {:<26} observed: {:<26} margin: {:+.3e}  {}",
                l.name,
                l.bound,
                l.observed,
                l.margin,
                if l.passed { "PASS" } else { "FAIL" }
            );
            if verbose {
                for d in &l.details {
                    let _ = writeln!(out, "    {d}");
                }
            }
        }
        let failed = self.failures().len();
        let _ = writeln!(out, "{} checks, {} failed", self.lines.len(), failed);
        out
    }
}

fn line(name: &str, bound: String, observed: String, margin: f64, details: Vec<String>) -> CheckLine {
    CheckLine {
        name: name.into(),
        bound,
        observed,
        margin,
        passed: margin >= 0.0 && margin.is_finite(),
        details,
    }
}

fn coefficient_check(cfg: &SuiteConfig) -> Result<CheckLine> {
    let mut margin = f64::INFINITY;
    let mut details = Vec::new();
    let mut worst_sum = 0.0f64;
    for &alpha in &cfg.alphas {
        let mut stencil = fcd_coefficients(alpha, 4096)?;
        if cfg.flip_s1 {
            let mut c = stencil.coeffs().to_vec();
            c[1] = -c[1];
            stencil = FcdStencil::from_raw(alpha, c)?;
        }
        let f = checks::stencil_facts(&stencil);
        // every condition as a signed slack: s0 > 0, s_k < 0, 0 < sum < 1e-2
        let m = f.s0.min(-f.max_off).min(f.partial_sum).min(1e-2 - f.partial_sum);
        margin = margin.min(m);
        worst_sum = worst_sum.max(f.partial_sum);
        details.push(format!(
            "α={alpha}: s0={:.6} max s_k={:.3e} sum={:.3e}",
            f.s0, f.max_off, f.partial_sum
        ));
    }
    let two = fcd_coefficients(2.0, 8)?;
    let exact = two.coeffs() == [2.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    details.push(format!("α=2: {:?}", two.coeffs()));
    if !exact {
        margin = margin.min(-1.0);
    }
    Ok(line(
        "fcd_coefficients",
        "s0>0, s_k<0, sum∈(0,1e-2)".into(),
        format!("max sum {worst_sum:.3e}"),
        margin,
        details,
    ))
}

fn tau_check(cfg: &SuiteConfig) -> Result<CheckLine> {
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for &alpha in &cfg.alphas {
        for &n in &cfg.tau_sizes {
            let e = checks::tau_exactness(alpha, n)?;
            worst = worst.max(e);
            details.push(format!("α={alpha} N={n}: {e:.3e}"));
        }
    }
    Ok(line("tau_exactness", "<= 1e-12".into(), format!("{worst:.3e}"), 1e-12 - worst, details))
}

fn hankel_check(cfg: &SuiteConfig) -> Result<CheckLine> {
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    let sizes: Vec<usize> = [4usize, 8, 16, 32, 64, 128, 256]
        .into_iter()
        .filter(|&n| n <= cfg.hankel_max_n)
        .collect();
    for &alpha in &cfg.alphas {
        for &n in &sizes {
            let v = checks::hankel_relative_norm(alpha, n)?;
            worst = worst.max(v);
            details.push(format!("α={alpha} N={n}: {v:.6}"));
        }
    }
    Ok(line("hankel_relative_norm", "< 0.5".into(), format!("{worst:.6}"), 0.5 - worst, details))
}

fn compact_check(cfg: &SuiteConfig) -> Result<CheckLine> {
    let bound = 6f64.sqrt() / 2.0;
    let mut margin = f64::INFINITY;
    let mut worst_cond = 0.0f64;
    let mut details = Vec::new();
    let mut n = 1;
    while n <= cfg.compact_max_n {
        for &alpha in &cfg.alphas {
            let (lo, hi, cond) = checks::compact_spectrum(alpha, n)?;
            margin = margin.min(lo - 2.0 / 3.0).min(1.0 - hi).min(bound + 1e-12 - cond);
            worst_cond = worst_cond.max(cond);
        }
        details.push(format!("N={n}: worst cond so far {worst_cond:.9}"));
        n *= 2;
    }
    Ok(line(
        "compact_operator_spectrum",
        format!("eig∈(2/3,1), cond<={bound:.6}"),
        format!("cond {worst_cond:.9}"),
        margin,
        details,
    ))
}

fn kronecker_check(cfg: &SuiteConfig) -> CheckLine {
    let gap = (0..5).map(|k| checks::kronecker_eigen_gap(3 + k, 4, cfg.seed + k as u64)).fold(0.0, f64::max);
    line("kronecker_eigenvalues", "<= 1e-10".into(), format!("{gap:.3e}"), 1e-10 - gap, vec![])
}

fn mediant_check(cfg: &SuiteConfig) -> CheckLine {
    let slack = checks::mediant_slack(10_000, cfg.seed);
    line("mediant_inequality", ">= -1e-14".into(), format!("slack {slack:.3e}"), slack + 1e-14, vec![])
}

fn rho_check() -> Result<CheckLine> {
    let mut margin = f64::INFINITY;
    for i in 1..=100 {
        let t = i as f64 / 101.0 * std::f64::consts::FRAC_PI_2;
        margin = margin.min(t.sin() - rho_theta(t)?);
    }
    Ok(line("rho_theta_below_sin", "ρ_θ < sin θ".into(), "100-point grid".into(), margin, vec![]))
}

fn audit_self_test() -> CheckLine {
    // a history that breaks (2+c)c^k at k = 2 must be caught
    let bad = residual_history_audit(&[1.0, 0.1, 0.9], 0.5);
    let ok = residual_history_audit(&[1.0, 0.5, 0.2], 0.5);
    let caught = bad.first_violation == Some(2) && ok.passed;
    line(
        "residual_audit_self_test",
        "violation at k=2 flagged".into(),
        format!("{:?}", bad.first_violation),
        if caught { 0.0 } else { -1.0 },
        vec![],
    )
}

fn positivity_check() -> Result<CheckLine> {
    let mut margin = f64::INFINITY;
    let mut details = Vec::new();
    let cases = [(Preset::Ex1, 31usize), (Preset::Ex2, 15), (Preset::Ex3, 7)];
    for (preset, n) in cases {
        let spec = preset.spec(&preset.default_alphas(), n, 64)?;
        let ops = Discretization::new(&spec)?;
        let b = compute_e_bar(&spec)?;
        let p = build_precond_for(&ops, b.e_bar)?;
        let min = p.diag().iter().copied().fold(f64::INFINITY, f64::min);
        margin = margin.min(min - b.e_bar);
        details.push(format!("{preset} N={n}: min diag {min:.6} vs ē {:.6}", b.e_bar));
    }
    Ok(line("preconditioner_positive", "min diag > ē".into(), "see details".into(), margin, details))
}

fn ex1(cfg: &SuiteConfig) -> Result<crate::ProblemSpec> {
    Preset::Ex1.spec(&[1.5], cfg.ex1_n, cfg.ex1_m)
}

fn similarity_check(cfg: &SuiteConfig) -> Result<CheckLine> {
    let mut worst = checks::similarity_gap(&ex1(cfg)?, 0)?;
    let mut details = vec![format!("ex1 N={}: {worst:.3e}", cfg.ex1_n)];
    let spec2 = Preset::Ex2.spec(&[1.5, 1.7], 7, 64)?;
    let g2 = checks::similarity_gap(&spec2, 0)?;
    details.push(format!("ex2 N=7: {g2:.3e}"));
    worst = worst.max(g2);
    Ok(line("similarity_spectra", "<= 1e-9".into(), format!("{worst:.3e}"), 1e-9 - worst, details))
}

fn clustering_check(cfg: &SuiteConfig) -> Result<CheckLine> {
    let mut margin = f64::INFINITY;
    let mut details = Vec::new();
    let specs = [
        ("ex1", ex1(cfg)?),
        ("ex2", Preset::Ex2.spec(&[1.5, 1.7], 7, 64)?),
        ("ex3", Preset::Ex3.spec(&[1.3, 1.5, 1.7], 3, 64)?),
    ];
    for (name, spec) in &specs {
        let c = checks::clustering(spec, 0)?;
        margin = margin
            .min(c.diameter_plain - c.diameter_preconditioned)
            .min(c.min_real_preconditioned);
        details.push(format!(
            "{name}: diameter {:.4} -> {:.4}, min Re {:.4}",
            c.diameter_plain, c.diameter_preconditioned, c.min_real_preconditioned
        ));
    }
    Ok(line(
        "spectral_clustering",
        "diam(P⁻¹Ã)<diam(Ã), Re>0".into(),
        "see details".into(),
        margin,
        details,
    ))
}

fn probe_check(cfg: &SuiteConfig) -> Result<CheckLine> {
    let probe = numerical_range_probe(&ex1(cfg)?, 0, cfg.probe_samples, cfg.seed)?;
    let (lo, hi) = probe.envelope;
    let violations = probe.violations();
    let mut details = vec![
        format!("{} samples, θ = {:.4}", probe.samples.len(), probe.theta),
        format!("ê = {:.6}, ě = {:.6}", probe.bounds.e_hat, probe.bounds.e_check),
    ];
    if let Some(v) = violations.first() {
        details.push(format!("first violation {:?}: |z| = {:.6}", v.direction, v.value.norm()));
    }
    Ok(line(
        "numerical_range_envelope",
        format!("[{lo:.4}, {hi:.4}]"),
        format!("[{:.4}, {:.4}]", probe.v_min, probe.r_max),
        (probe.v_min - lo).min(hi - probe.r_max),
        details,
    ))
}

fn rate_check(cfg: &SuiteConfig) -> Result<CheckLine> {
    let spec = ex1(cfg)?;
    let (c, audit) = checks::two_sided_rate(&spec, &GmresConfig::for_dimension(1))?;
    Ok(line(
        "two_sided_residual_bound",
        format!("(2+c)c^k, c={c:.6}"),
        format!("{} iterations", audit.checks),
        audit.worst_margin,
        vec![format!("worst at (step, k) = {:?}", audit.worst_at)],
    ))
}

fn relation_check(cfg: &SuiteConfig) -> Result<CheckLine> {
    let spec = ex1(cfg)?;
    let audit = checks::one_two_sided_relation(&spec, &GmresConfig::for_dimension(1), 1e-12)?;
    Ok(line(
        "one_sided_vs_two_sided",
        "‖r_j‖ <= ‖r̃_j‖/√ē + 1e-12".into(),
        format!("{} iterations", audit.checks),
        audit.worst_margin,
        vec![format!("worst at (step, j) = {:?}", audit.worst_at)],
    ))
}

/// Runs every check. Errors are reserved for configuration problems; a
/// violated inequality shows up as a failing line.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let lines = vec![
        coefficient_check(cfg)?,
        tau_check(cfg)?,
        hankel_check(cfg)?,
        compact_check(cfg)?,
        kronecker_check(cfg),
        mediant_check(cfg),
        rho_check()?,
        audit_self_test(),
        positivity_check()?,
        similarity_check(cfg)?,
        clustering_check(cfg)?,
        probe_check(cfg)?,
        rate_check(cfg)?,
        relation_check(cfg)?,
    ];
    Ok(SuiteReport { lines })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SuiteConfig {
        SuiteConfig {
            tau_sizes: vec![8, 16],
            hankel_max_n: 32,
            compact_max_n: 64,
            probe_samples: 500,
            ex1_m: 64,
            ..SuiteConfig::default()
        }
    }

    #[test]
    fn quick_suite_passes() {
        let r = run_suite(&quick()).unwrap();
        assert!(r.all_passed(), "{}", r.render(true));
        let text = r.render(false);
        assert_eq!(text.lines().count(), r.lines.len() + 1);
        assert!(text.lines().take(r.lines.len()).all(|l| l.ends_with("PASS")));
    }

    #[test]
    fn flipped_s1_fails_the_coefficient_check_only() {
        let r = run_suite(&SuiteConfig {
            flip_s1: true,
            ..quick()
        })
        .unwrap();
        let failed: Vec<_> = r.failures().iter().map(|l| l.name.clone()).collect();
        assert_eq!(failed, vec!["fcd_coefficients".to_string()]);
    }

    #[test]
    fn verbose_adds_details() {
        let r = run_suite(&quick()).unwrap();
        assert!(r.render(true).lines().count() > r.render(false).lines().count());
        assert!(r.render(true).contains("α=1.5"));
    }
}
