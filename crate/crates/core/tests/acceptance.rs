//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use hvbench::bohmian::presets::{free_gaussian_width, product_state};
use hvbench::bohmian::two_particle::Axis;
use hvbench::bohmian::*;
use hvbench::cli::{run, ExperimentConfig};
use hvbench::correlations::*;
use hvbench::ensembles::*;
use hvbench::lhv::*;
use hvbench::spin_algebra::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ms(d: Duration) -> String {
    format!("{:.0} ms", d.as_secs_f64() * 1e3)
}

fn singlet_correlation_grid() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let a = Direction::in_xz_plane(0.37);
    for k in 0..360 {
        let theta = 2.0 * PI * k as f64 / 360.0;
        let b = Direction::in_xz_plane(0.37 + theta);
        worst = worst.max((singlet_correlation(&a, &b) + theta.cos()).abs());
    }
    let el = start.elapsed();
    outcome(
        worst <= 1e-10 && el < Duration::from_secs(1),
        format!("max |P + cos θ| = {worst:.2e} (tol 1e-10), {}", ms(el)),
    )
}

/// `|cos 2θ − cos θ| + 1 + cos θ` for the coplanar configuration.
fn singlet_chsh_oracle(theta: f64) -> f64 {
    ((2.0 * theta).cos() - theta.cos()).abs() + (theta.cos() + 1.0).abs()
}

fn violation_claim() -> Outcome {
    let n = 10_000;
    let min_excess = (1..n)
        .map(|k| chsh(CorrelationModel::Singlet, &bell_config(0.5 * PI * k as f64 / n as f64)) - 2.0)
        .fold(f64::MAX, f64::min);
    let scan_max = (0..=360)
        .map(|k| chsh(CorrelationModel::Singlet, &bell_config(PI * k as f64 / 360.0)))
        .fold(f64::MIN, f64::max);
    let at_third = chsh(CorrelationModel::Singlet, &bell_config(PI / 3.0));
    let at_quarter = chsh(CorrelationModel::Singlet, &bell_config(PI / 4.0));
    let quarter_ref = 1.0 + 2f64.sqrt();
    let oracle_gap = (at_quarter - singlet_chsh_oracle(PI / 4.0)).abs();
    let pass = min_excess > 0.0
        && (scan_max - 2.5).abs() <= 1e-9
        && (at_third - 2.5).abs() <= 1e-9
        && (at_quarter - quarter_ref).abs() <= 1e-9
        && oracle_gap <= 1e-12;
    outcome(
        pass,
        format!(
            "min excess on (0, π/2) = {min_excess:.2e}; scan max = {scan_max:.12}; S(π/3) = {at_third:.12}; S(π/4) = {at_quarter:.12}"
        ),
    )
}

fn mixture_claim() -> Outcome {
    let n = 10_000;
    let vals: Vec<f64> = (0..n).map(|k| mixture_lhs(PI * k as f64 / (n - 1) as f64)).collect();
    let max = vals.iter().cloned().fold(f64::MIN, f64::max);
    let ends = (vals[0] - 2.0).abs().max((vals[n - 1] - 2.0).abs());
    let mut entry_err = 0.0f64;
    let mut identity_err = 0.0f64;
    for k in 0..100 {
        let th = PI * k as f64 / 99.0;
        let s = bell_config(th);
        let (c, c2) = (th.cos(), (2.0 * th).cos());
        for (got, want) in [
            (mixture_correlation(&s.a, &s.b), -c),
            (mixture_correlation(&s.a_prime, &s.b), -c * c),
            (mixture_correlation(&s.a, &s.b_prime), -c2),
            (mixture_correlation(&s.a_prime, &s.b_prime), -c * c2),
        ] {
            entry_err = entry_err.max((got - want).abs());
        }
        identity_err = identity_err.max((chsh(CorrelationModel::Mixture, &s) - mixture_lhs(th)).abs());
    }
    let pass = max <= 2.0 + 1e-12 && ends <= 1e-9 && (max - 2.0).abs() <= 1e-9 && entry_err <= 1e-10 && identity_err <= 1e-12;
    outcome(
        pass,
        format!("max lhs = {max:.15}; endpoint gap = {ends:.1e}; entry err = {entry_err:.1e}; chsh vs lhs = {identity_err:.1e}"),
    )
}

fn random_direction(rng: &mut impl Rng) -> Direction {
    let c: f64 = rng.random_range(-1.0..1.0);
    Direction::from_polar(c.acos(), rng.random_range(0.0..2.0 * PI))
}

fn lhv_bound() -> Outcome {
    let start = Instant::now();
    let n = 100_000;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(18);
    let settings: Vec<MeterSettings> = (0..100)
        .map(|_| MeterSettings {
            a: random_direction(&mut rng),
            a_prime: random_direction(&mut rng),
            b: random_direction(&mut rng),
            b_prime: random_direction(&mut rng),
        })
        .collect();
    let mut worst_z = f64::MIN;
    let mut max_chsh = f64::MIN;
    let mut bound_ok = true;
    for name in MODEL_NAMES {
        let model = model_by_name(name).unwrap();
        for (k, s) in settings.iter().enumerate() {
            let e = chsh_of_model(model.as_ref(), s, n, k as u64).unwrap();
            bound_ok &= e.mean <= 2.0 + 5.0 * e.stderr;
            max_chsh = max_chsh.max(e.mean);
        }
    }
    let sign = builtin_sign_model();
    let a = Direction::in_xz_plane(0.0);
    let mut grid_ok = true;
    for k in 0..50 {
        let theta = PI * k as f64 / 49.0;
        let e = estimate_correlation(&sign, &a, &Direction::in_xz_plane(theta), n, 100 + k).unwrap();
        let dev = (e.mean - (-1.0 + 2.0 * theta / PI)).abs();
        grid_ok &= dev <= 5.0 * e.stderr + 1e-12;
        if e.stderr > 0.0 {
            worst_z = worst_z.max(dev / e.stderr);
        }
    }
    let el = start.elapsed();
    outcome(
        bound_ok && grid_ok && el < Duration::from_secs(60),
        format!("max CHSH over 2×100 settings = {max_chsh:.4}; sign-model worst |z| = {worst_z:.2} (tol 5); {}", ms(el)),
    )
}

fn von_neumann_refutation() -> Outcome {
    let gaps = gap_table(&[2, 3, 4]).unwrap();
    let exact = gaps.iter().all(|&(d, g)| g == (d - 1) as f64);

    let ensembles = [
        TrajectoryEnsemble::free_particle(0.3, 0.7, 1.0).unwrap(),
        TrajectoryEnsemble::new(
            vec![std::sync::Arc::new(HarmonicPath {
                x0: vec![0.5, -1.0],
                p0: vec![0.2, 0.4],
                mass: 1.0,
                omega: 1.3,
            })],
            1.0,
        )
        .unwrap(),
    ];
    let mut norm_err = 0.0f64;
    for e in &ensembles {
        for eps in [0.2, 0.1, 0.05, 0.025, 0.0125] {
            for t in [0.0, 1.0, 2.5] {
                norm_err = norm_err.max((integrate_coincidence(e, t, eps).unwrap() - 1.0).abs());
            }
        }
    }
    let fx = |x: &[f64], _: &[f64]| x[0];
    let fp = |_: &[f64], p: &[f64]| p[0];
    let mut disp = 0.0f64;
    for t in [0.0, 1.0, 2.5] {
        disp = disp.max(classical_dispersion(&ensembles[0], t, &fx, &DEFAULT_EPSILONS).unwrap().extrapolated.abs());
        disp = disp.max(classical_dispersion(&ensembles[0], t, &fp, &DEFAULT_EPSILONS).unwrap().extrapolated.abs());
    }
    outcome(
        exact && norm_err <= 1e-8 && disp < 1e-6,
        format!(
            "gaps = {:?}; max |∫ρ − 1| = {norm_err:.1e} (tol 1e-8); max |dispersion extrapolant| = {disp:.1e} (tol 1e-6)",
            gaps.iter().map(|g| g.1).collect::<Vec<_>>()
        ),
    )
}

fn bohmian_checks() -> Outcome {
    let start = Instant::now();
    let p = wave_preset("free-gaussian", &PresetParams::default()).unwrap();
    assert_eq!(p.wave.psi.len(), 2048);
    let w1 = evolve(&p.wave, &p.potential, 1e-3, 1000).unwrap();
    let width_err = (w1.width(0) - 2f64.sqrt()).abs();

    let lat = Lattice::centered(1, 2048, 16.0).unwrap();
    let g = WaveGrid::from_fn(lat, 1.0, 1.0, |x| Complex64::new((-x[0] * x[0] / 4.0).exp(), 0.0)).unwrap();
    let q = quantum_potential(&polar_decompose(&g));
    let q0_err = (q.values[1024] - 0.25).abs();

    let init = vec![vec![1.0], vec![-0.6], vec![2.0]];
    let opts = TrajectoryOptions {
        dt: 1e-3,
        steps: 1000,
        save_every: 50,
    };
    let (set, _) = integrate_trajectories(&p.wave, &p.potential, &init, opts, InitialLaw::Explicit).unwrap();
    let mut law_err = 0.0f64;
    for (s, &t) in set.times.iter().enumerate() {
        for (k, x) in init.iter().enumerate() {
            law_err = law_err.max((set.position(s, k)[0] - x[0] * free_gaussian_width(1.0, t, 1.0, 1.0)).abs());
        }
    }

    let x0 = sample_born_positions(&p.wave, 10_000, 2718).unwrap();
    let starts: Vec<Vec<f64>> = x0.iter().map(|&x| vec![x]).collect();
    let opts = TrajectoryOptions {
        dt: 1e-3,
        steps: 1000,
        save_every: 100,
    };
    let (set, w) = integrate_trajectories(&p.wave, &p.potential, &starts, opts, InitialLaw::Born { seed: 2718 }).unwrap();
    let ks = ks_distance(&set.final_positions(), &w).unwrap();
    let crit = ks_critical_1pct(10_000);
    let el = start.elapsed();
    outcome(
        width_err <= 1e-4 && q0_err <= 1e-4 && law_err <= 1e-3 && ks < crit && el < Duration::from_secs(120),
        format!(
            "width err = {width_err:.1e}; Q(0) err = {q0_err:.1e}; trajectory law err = {law_err:.1e}; KS = {ks:.4} < {crit:.4}; {}",
            ms(el)
        ),
    )
}

fn locality_dichotomy() -> Outcome {
    let products = [
        two_particle_preset("two-particle-product", 256).unwrap(),
        product_state(Axis::centered(200, 9.0), -0.8, 1.7).unwrap(),
    ];
    let mut local_ok = true;
    let mut local_spread = 0.0f64;
    for tp in &products {
        let r = factorization_test(tp, 2000, 31).unwrap();
        let spread = r.spread_v1.max(r.spread_v2);
        local_spread = local_spread.max(spread);
        local_ok &= r.verdict == Verdict::Local && spread <= 1e-10;
    }
    let ent = two_particle_preset("two-particle-entangled", 256).unwrap();
    let r = factorization_test(&ent, 2000, 31).unwrap();
    let witness_spread = r.witness.map_or(0.0, |w| (w.velocities.0 - w.velocities.1).abs());
    let nonlocal_ok = r.verdict == Verdict::Nonlocal && witness_spread >= 0.1;
    outcome(
        local_ok && nonlocal_ok,
        format!("product spread = {local_spread:.1e} (local, tol 1e-10); entangled witness spread = {witness_spread:.3} ({})", r.verdict),
    )
}

fn csv_bodies(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let base = |sub: &str| ExperimentConfig {
        subcommand: Some(sub.into()),
        seed: Some(77),
        ..Default::default()
    };
    let configs = vec![
        ExperimentConfig { theta_steps: Some(90), ..base("chsh-scan") },
        ExperimentConfig { model: Some("mixture".into()), n: Some(10_000), ..base("trials") },
        ExperimentConfig { model: Some("singlet".into()), n: Some(10_000), ..base("trials") },
        ExperimentConfig { n: Some(20_000), theta_steps: Some(10), ..base("lhv-sim") },
        base("dispersion-check"),
        ExperimentConfig {
            preset: Some("double-slit".into()),
            grid_points: Some(1024),
            t_end: Some(0.3),
            particles: Some(500),
            ..base("bohm-evolve")
        },
        ExperimentConfig { preset: Some("two-particle-entangled".into()), grid_points: Some(96), ..base("bohm-evolve") },
    ];
    let mut compared = 0;
    let mut mismatched = Vec::new();
    for (i, cfg) in configs.into_iter().enumerate() {
        let mut bodies = Vec::new();
        for (tag, threads) in [("a", 1), ("b", 1), ("c", 4), ("d", 3)] {
            let out = tmp.path().join(format!("{i}{tag}"));
            let c = ExperimentConfig {
                out: Some(out.clone()),
                threads: Some(threads),
                ..cfg.clone()
            }
            .resolve()
            .unwrap();
            run(&c).unwrap();
            bodies.push(csv_bodies(&out));
        }
        compared += bodies[0].len();
        if bodies.iter().any(|b| *b != bodies[0]) || bodies[0].is_empty() {
            mismatched.push(cfg.subcommand.clone().unwrap());
        }
    }
    outcome(
        mismatched.is_empty(),
        format!("{compared} CSV files × 4 runs (threads 1, 1, 4, 3); mismatches: {mismatched:?}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("singlet correlation equals −cos θ", singlet_correlation_grid),
        ("singlet CHSH violation", violation_claim),
        ("mixture satisfies the CHSH bound", mixture_claim),
        ("local hidden-variable bound", lhv_bound),
        ("trace gap and dispersion-free ensembles", von_neumann_refutation),
        ("pilot-wave quantitative checks", bohmian_checks),
        ("locality dichotomy", locality_dichotomy),
        ("determinism across runs and threads", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !o.pass {
            failed += 1;
        }
        println!("{} [{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
