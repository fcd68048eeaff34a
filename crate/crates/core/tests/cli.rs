use std::path::Path;
use std::process::{Command, Output};

fn hvbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hvbench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let o = hvbench(args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&read(dir, "manifest.json")).unwrap()
}

#[test]
fn chsh_scan_reaches_known_maxima() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["chsh-scan", "--theta-steps", "360", "--out", out]);
    let csv = read(dir.path(), "chsh_scan.csv");
    assert!(!csv.contains('\r'));
    let theta = column(&csv, "theta");
    let singlet = column(&csv, "singlet");
    let mixture = column(&csv, "mixture");
    let (k, &smax) = singlet.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    assert!((smax - 2.5).abs() < 1e-9);
    assert!((theta[k] - std::f64::consts::FRAC_PI_3).abs() < 1e-12);
    let mmax = mixture.iter().cloned().fold(f64::MIN, f64::max);
    assert!((mmax - 2.0).abs() < 1e-9);
    let m = manifest(dir.path());
    assert_eq!(m["config"]["theta_steps"], 360);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn dispersion_check_gap_column() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["dispersion-check", "--d", "2,3,4", "--out", dir.path().to_str().unwrap()]);
    let csv = read(dir.path(), "gap.csv");
    assert_eq!(column(&csv, "gap"), vec![1.0, 2.0, 3.0]);
    for v in column(&read(dir.path(), "normalization.csv"), "integral") {
        assert!((v - 1.0).abs() < 1e-8);
    }
    for v in column(&read(dir.path(), "dispersion_extrapolated.csv"), "extrapolated") {
        assert!(v.abs() < 1e-6);
    }
}

#[test]
fn trials_reject_zero_count() {
    let dir = tempfile::tempdir().unwrap();
    let o = hvbench(&["trials", "--model", "mixture", "--n", "0", "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("`n`"));
}

#[test]
fn trials_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["trials", "--model", "mixture", "--n", "50", "--seed", "9", "--out", dir.path().to_str().unwrap()]);
    let csv = read(dir.path(), "trials.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("trial,label,A,B"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 50);
    for r in rows {
        let f: Vec<&str> = r.split(',').collect();
        assert!(f[1] == "PM" || f[1] == "MP");
        assert!(f[2] == "1" || f[2] == "-1");
    }
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "subcommand = \"trials\"\nn = 10\nwidth = 3\n").unwrap();
    let o = hvbench(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`width`"));

    std::fs::write(&cfg, "subcommand = \"chsh-scan\"\nmodel = \"singlet\"\n").unwrap();
    let o = hvbench(&["--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("`model`"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("o");
    std::fs::write(&cfg, "subcommand = \"trials\"\nn = 10\nseed = 4\nmodel = \"mixture\"\n").unwrap();
    ok(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "trials", "--n", "7"]);
    let m = manifest(&out);
    assert_eq!(m["config"]["n"], 7);
    assert_eq!(m["config"]["seed"], 4);
    assert_eq!(m["config"]["model"], "mixture");
    assert_eq!(read(&out, "trials.csv").lines().count(), 8);
}

#[test]
fn guard_violation_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let o = hvbench(&[
        "bohm-evolve",
        "--preset",
        "harmonic-ground",
        "--grid-points",
        "256",
        "--dt",
        "0.05",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("guard"));
}

fn files_equal(a: &Path, b: &Path, names: &[&str]) {
    for n in names {
        assert_eq!(read(a, n), read(b, n), "{n} differs");
    }
}

#[test]
fn outputs_ignore_thread_count_and_rerun_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let p = |s: &str| dir.path().join(s);
    let runs: [(&[&str], &[&str]); 3] = [
        (&["trials", "--model", "singlet", "--n", "20000", "--seed", "5"], &["trials.csv"]),
        (
            &["lhv-sim", "--n", "20000", "--theta-steps", "8", "--seed", "5"],
            &["lhv_sign.csv", "lhv_mixture.csv", "lhv_chsh.csv"],
        ),
        (
            &["bohm-evolve", "--preset", "free-gaussian", "--grid-points", "512", "--t-end", "0.2", "--particles", "300", "--seed", "5"],
            &["trajectories.csv", "density.csv", "phase.csv", "quantum_potential.csv", "residuals.csv"],
        ),
    ];
    for (i, (args, files)) in runs.iter().enumerate() {
        let (one, four, again) = (p(&format!("{i}a")), p(&format!("{i}b")), p(&format!("{i}c")));
        let mut a = args.to_vec();
        a.extend(["--threads", "1", "--out", one.to_str().unwrap()]);
        ok(&a);
        let mut b = args.to_vec();
        b.extend(["--threads", "4", "--out", four.to_str().unwrap()]);
        ok(&b);
        files_equal(&one, &four, files);
        ok(&["--config", one.join("manifest.json").to_str().unwrap(), "--out", again.to_str().unwrap()]);
        files_equal(&one, &again, files);
    }
}

#[test]
fn every_bohm_preset_runs() {
    let dir = tempfile::tempdir().unwrap();
    for (k, args) in [
        vec!["--preset", "free-gaussian", "--grid-points", "256", "--t-end", "0.1", "--dat"],
        vec!["--preset", "harmonic-ground", "--grid-points", "256", "--t-end", "0.1"],
        vec!["--preset", "double-slit", "--grid-points", "1024", "--t-end", "0.2"],
        vec!["--preset", "free-gaussian", "--dim", "2", "--grid-points", "64", "--dt", "0.01", "--t-end", "0.1", "--particles", "9"],
        vec!["--preset", "two-particle-product", "--grid-points", "64", "--probes", "100"],
        vec!["--preset", "two-particle-entangled", "--grid-points", "64", "--probes", "100"],
    ]
    .into_iter()
    .enumerate()
    {
        let out = dir.path().join(k.to_string());
        let mut a = vec!["bohm-evolve"];
        a.extend(args.iter());
        a.extend(["--out", out.to_str().unwrap()]);
        ok(&a);
        assert_eq!(manifest(&out)["status"], "ok");
    }
    let d = dir.path();
    assert!(d.join("0/trajectories.dat").exists());
    assert!(read(&d.join("3"), "trajectories.csv").starts_with("t,particle,x,y\n"));
    assert!(read(&d.join("3"), "density.csv").starts_with("x,y,value\n"));
    assert!(read(&d.join("0"), "density.csv").starts_with("x,value\n"));
    assert!(read(&d.join("4"), "factorization.csv").contains("\nlocal,"));
    assert!(read(&d.join("5"), "factorization.csv").contains("\nnonlocal,"));
}

#[test]
fn unknown_preset_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = hvbench(&["bohm-evolve", "--preset", "triple-slit", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`preset`"));
}
