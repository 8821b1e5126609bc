use std::path::PathBuf;
use std::process::{Command, Output};

fn rsfde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsfde")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn temp_path(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rsfde-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

const HEADER: &str = "M,Nplus1,alphas,error,cpu_one_sided,iters_one_sided,cpu_two_sided,iters_two_sided";

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn empty_sweep_gives_header_only() {
    let cfg = temp_path("empty.toml");
    std::fs::write(&cfg, "preset = \"ex1\"\nN = []\n").unwrap();
    let o = rsfde(&["table", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), format!("{HEADER}\n"));
}

#[test]
fn table_formats_and_is_byte_stable() {
    let args = ["table", "--preset", "ex1", "--M", "64", "--N", "7,15", "--alpha", "1.3", "--alpha", "1.7", "--no-cpu"];
    let a = rsfde(&args);
    let b = rsfde(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with(HEADER));
    assert!(!text.contains('\r'));
    let rows = rows(&text);
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(r.len(), 8);
        assert_eq!(r[0], "64");
        // three significant digits in scientific notation
        let (mant, exp) = r[3].split_once('e').unwrap();
        assert_eq!(mant.len(), 4, "{}", r[3]);
        exp.parse::<i32>().unwrap();
        assert_eq!(r[4], "-");
        assert_eq!(r[6], "-");
        for it in [&r[5], &r[7]] {
            assert_eq!(it.split_once('.').unwrap().1.len(), 1, "{it}");
        }
    }
    assert_eq!((rows[0][1].as_str(), rows[0][2].as_str()), ("8", "1.3"));
    assert_eq!((rows[3][1].as_str(), rows[3][2].as_str()), ("16", "1.7"));
}

#[test]
fn cpu_columns_are_seconds_by_default() {
    let o = rsfde(&["table", "--preset", "ex2", "--M", "8", "--N", "7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = &rows(&stdout(&o))[0];
    assert_eq!(r[2], "1.5;1.7");
    assert!(r[4].parse::<f64>().unwrap() >= 0.0);
    assert!(r[6].parse::<f64>().unwrap() >= 0.0);
}

#[test]
fn example_one_alpha_one_nine_errors() {
    let o = rsfde(&["table", "--preset", "ex1", "--M", "4096", "--N", "15,31,63", "--alpha", "1.9", "--no-cpu"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let reference = [2.34e-4, 1.44e-5, 8.81e-7];
    for (r, p) in rows(&stdout(&o)).iter().zip(reference) {
        let e: f64 = r[3].parse().unwrap();
        assert!(e / p < 3.0 && p / e < 3.0, "error {e} vs {p}");
    }
}

#[test]
fn example_three_coarse_iterations() {
    let o = rsfde(&["table", "--preset", "ex3", "--M", "1024", "--N", "7", "--alpha", "1.5,1.7,1.9", "--no-cpu"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let it: f64 = rows(&stdout(&o))[0][5].parse().unwrap();
    assert!((it - 6.0).abs() <= 1.0, "{it}");
}

#[test]
fn invalid_sweep_is_a_usage_error() {
    let o = rsfde(&["table", "--preset", "ex2", "--M", "8", "--N", "7", "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).is_empty());
    assert!(stderr(&o).contains("fractional orders"), "{}", stderr(&o));
    let o = rsfde(&["table", "--preset", "ex1", "--M", "8", "--N", "7", "--alpha", "2.5"]);
    assert_eq!(o.status.code(), Some(2));
}

fn cloud_radius(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (cx, cy) = points.iter().fold((0.0, 0.0), |(x, y), p| (x + p.0 / n, y + p.1 / n));
    points.iter().map(|p| (p.0 - cx).hypot(p.1 - cy)).fold(0.0, f64::max)
}

#[test]
fn spectrum_rows_and_clustering() {
    let o = rsfde(&["spectrum", "--preset", "ex1", "--N", "15", "--M", "4096"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("matrix_tag,re,im\n"));
    let mut plain = Vec::new();
    let mut pre = Vec::new();
    for r in rows(&text) {
        let z = (r[1].parse::<f64>().unwrap(), r[2].parse::<f64>().unwrap());
        match r[0].as_str() {
            "a_tilde" => plain.push(z),
            "preconditioned" => pre.push(z),
            t => panic!("unexpected tag {t}"),
        }
    }
    assert_eq!((plain.len(), pre.len()), (15, 15));
    assert!(cloud_radius(&pre) < cloud_radius(&plain));
}

#[test]
fn spectrum_refuses_large_and_degenerate_problems() {
    let o = rsfde(&["spectrum", "--preset", "ex2", "--N", "70", "--M", "4"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("dense limit"), "{}", stderr(&o));
    let o = rsfde(&["spectrum", "--preset", "ex1", "--kappa", "0", "--N", "7", "--M", "4"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("must be positive"), "{}", stderr(&o));
}

#[test]
fn validate_passes_and_reports_margins() {
    let o = rsfde(&["validate", "--samples", "500", "--M", "512"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("14 checks, 0 failed"), "{text}");
    assert!(text.lines().filter(|l| l.ends_with("PASS")).count() == 14);
    let v = rsfde(&["validate", "--samples", "500", "--M", "512", "--verbose"]);
    assert!(stdout(&v).lines().count() > text.lines().count());
}

#[test]
fn validate_flags_corrupted_coefficient() {
    let o = rsfde(&["validate", "--samples", "100", "--M", "64", "--flip-s1"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    let failed: Vec<&str> = text.lines().filter(|l| l.ends_with("FAIL")).collect();
    assert_eq!(failed.len(), 1, "{text}");
    assert!(failed[0].starts_with("fcd_coefficients"));
}

#[test]
fn flags_override_config_file() {
    let cfg = temp_path("solve.toml");
    std::fs::write(&cfg, "preset = \"ex1\"\nM = 32\nN = 7\nmode = \"two\"\ntol = 1e-8\n").unwrap();
    let o = rsfde(&["solve", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("mode: two"));
    let o = rsfde(&["solve", "--config", cfg.to_str().unwrap(), "--mode", "none", "--no-cpu"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("mode: none") && text.contains("M=32") && !text.contains("wall time"), "{text}");
}

#[test]
fn solve_writes_per_step_csv() {
    let out = temp_path("steps.csv");
    let o = rsfde(&["solve", "--preset", "ex2", "--M", "16", "--N", "7", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("error (Euclidean)"));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("step,iterations,relative_residual,converged\n"));
    assert_eq!(csv.lines().count(), 17);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn non_convergence_exits_nonzero() {
    let o = rsfde(&["solve", "--preset", "ex1", "--M", "8", "--N", "63", "--mode", "none", "--max-iter", "2"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("did not converge"), "{}", stderr(&o));
}

#[test]
fn custom_problem_from_config() {
    let cfg = temp_path("custom.toml");
    std::fs::write(&cfg, "preset = \"none\"\nkappa = [2.0, 3.0]\nalpha = [1.4, 1.6]\namplitude = 1.0\ne_scale = 10.0\nM = 8\nN = 7\n").unwrap();
    let o = rsfde(&["solve", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("custom d=2"), "{}", stdout(&o));
}
