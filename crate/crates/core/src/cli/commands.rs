use std::f64::consts::PI;

use serde_json::{json, Value};

use super::config::ExperimentConfig;
use super::output::{Cell, Sink, Table};
use super::CliError;
use crate::bohmian::presets::{preset_timing, TWO_PARTICLE_PRESETS};
use crate::bohmian::*;
use crate::correlations::{bell_config, chsh, mixture_lhs, sample_trials, CorrelationModel};
use crate::ensembles::{classical_dispersion, gap_table, TrajectoryEnsemble};
use crate::lhv::{chsh_of_model, estimate_correlation, model_by_name};
use crate::spin_algebra::Direction;

/// A run that wrote some output and then failed a check.
pub(super) struct Failed {
    pub results: Value,
    pub error: CliError,
}

impl From<CliError> for Failed {
    fn from(error: CliError) -> Self {
        Failed {
            results: Value::Null,
            error,
        }
    }
}

impl From<crate::Error> for Failed {
    fn from(e: crate::Error) -> Self {
        CliError::from(e).into()
    }
}

fn require(ok: bool, key: &str, reason: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(key, reason))
    }
}

fn get<T: Clone>(v: &Option<T>) -> T {
    v.clone().expect("resolved config fills every key of its subcommand")
}

pub(super) fn dispatch(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Value, Failed> {
    match cfg.subcommand.as_deref() {
        Some("chsh-scan") => Ok(chsh_scan(cfg, sink)?),
        Some("trials") => Ok(trials(cfg, sink)?),
        Some("lhv-sim") => lhv_sim(cfg, sink),
        Some("dispersion-check") => Ok(dispersion_check(cfg, sink)?),
        Some("bohm-evolve") => {
            if TWO_PARTICLE_PRESETS.contains(&get(&cfg.preset).as_str()) {
                Ok(two_particle(cfg, sink)?)
            } else {
                Ok(bohm_evolve(cfg, sink)?)
            }
        }
        other => Err(CliError::config("subcommand", format!("unknown subcommand {other:?}")).into()),
    }
}

fn theta_grid(steps: usize) -> impl Iterator<Item = f64> {
    (0..=steps).map(move |k| PI * k as f64 / steps as f64)
}

fn chsh_scan(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let steps = get(&cfg.theta_steps);
    require(steps >= 1, "theta_steps", "need at least one step")?;
    let mut t = Table::new(&["theta", "singlet", "mixture", "mixture_lhs"]);
    let (mut best_s, mut best_m) = ((f64::MIN, 0.0), (f64::MIN, 0.0));
    for theta in theta_grid(steps) {
        let s = bell_config(theta);
        let singlet = chsh(CorrelationModel::Singlet, &s);
        let mixture = chsh(CorrelationModel::Mixture, &s);
        if singlet > best_s.0 {
            best_s = (singlet, theta);
        }
        if mixture > best_m.0 {
            best_m = (mixture, theta);
        }
        t.push(vec![theta.into(), singlet.into(), mixture.into(), mixture_lhs(theta).into()]);
    }
    sink.table("chsh_scan", &t)?;
    Ok(json!({
        "singlet_max": best_s.0,
        "singlet_argmax": best_s.1,
        "mixture_max": best_m.0,
        "mixture_argmax": best_m.1,
    }))
}

fn trials(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let name = get(&cfg.model);
    let model = CorrelationModel::from_name(&name).map_err(|e| CliError::config("model", e.to_string()))?;
    let n = get(&cfg.n);
    require(n >= 1, "n", "trial count must be at least 1")?;
    let a = Direction::in_xz_plane(get(&cfg.theta_a));
    let b = Direction::in_xz_plane(get(&cfg.theta_b));
    let sample = sample_trials(model, &a, &b, n, get(&cfg.seed))?;
    let mut t = Table::new(&["trial", "label", "A", "B"]);
    for r in &sample.records {
        t.push(vec![r.index.into(), r.label.to_string().into(), r.a_outcome.into(), r.b_outcome.into()]);
    }
    sink.table("trials", &t)?;
    Ok(json!({
        "estimate": sample.estimate,
        "stderr": sample.stderr,
        "closed_form": model.correlation(&a, &b),
    }))
}

fn lhv_sim(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Value, Failed> {
    let n = get(&cfg.n);
    require(n >= 2, "n", "need at least two draws per correlation")?;
    let steps = get(&cfg.theta_steps);
    require(steps >= 1, "theta_steps", "need at least one step")?;
    let seed = get(&cfg.seed);
    let mut chsh_table = Table::new(&["model", "theta", "chsh", "stderr", "within_bound"]);
    let mut results = serde_json::Map::new();
    let mut violations = Vec::new();
    let a = Direction::in_xz_plane(0.0);
    for name in get(&cfg.models) {
        let model = model_by_name(&name).map_err(|e| CliError::config("models", e.to_string()))?;
        let mut corr = Table::new(&["theta", "mean", "stderr"]);
        let mut worst = f64::MIN;
        for (k, theta) in theta_grid(steps).enumerate() {
            let s = seed.wrapping_add(k as u64);
            let e = estimate_correlation(model.as_ref(), &a, &Direction::in_xz_plane(theta), n, s)?;
            corr.push(vec![theta.into(), e.mean.into(), e.stderr.into()]);
            let c = chsh_of_model(model.as_ref(), &bell_config(theta), n, s)?;
            let ok = c.mean <= 2.0 + 5.0 * c.stderr;
            if !ok {
                violations.push(format!("{name} at theta = {theta}: {} ± {}", c.mean, c.stderr));
            }
            worst = worst.max(c.mean);
            chsh_table.push(vec![
                name.as_str().into(),
                theta.into(),
                c.mean.into(),
                c.stderr.into(),
                Cell::S(ok.to_string()),
            ]);
        }
        sink.table(&format!("lhv_{name}"), &corr)?;
        results.insert(format!("{name}_chsh_max"), json!(worst));
    }
    sink.table("lhv_chsh", &chsh_table)?;
    results.insert("violations".into(), json!(violations.len()));
    let results = Value::Object(results);
    if violations.is_empty() {
        Ok(results)
    } else {
        Err(Failed {
            results,
            error: CliError::Bound(violations.join("; ")),
        })
    }
}

type Observable = fn(&[f64], &[f64]) -> f64;

const OBSERVABLES: [(&str, Observable); 4] = [
    ("x", |x, _| x[0]),
    ("p", |_, p| p[0]),
    ("x^2", |x, _| x[0] * x[0]),
    ("xp", |x, p| x[0] * p[0]),
];

fn dispersion_check(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let dims = get(&cfg.d);
    require(dims.iter().all(|&d| d >= 1), "d", "dimensions must be at least 1")?;
    let eps = get(&cfg.eps);
    let t = get(&cfg.t);
    let gaps = gap_table(&dims).map_err(|e| CliError::config("d", e.to_string()))?;
    let mut gt = Table::new(&["d", "gap"]);
    for &(d, g) in &gaps {
        gt.push(vec![d.into(), g.into()]);
    }
    sink.table("gap", &gt)?;

    let e = TrajectoryEnsemble::free_particle(get(&cfg.x0), get(&cfg.p0), 1.0)?;
    let snap = e.snapshot(t)?;
    let mut norm = Table::new(&["eps", "integral"]);
    for &w in &eps {
        norm.push(vec![w.into(), snap.integrate_coincidence(w).map_err(|e| CliError::config("eps", e.to_string()))?.into()]);
    }
    sink.table("normalization", &norm)?;

    let mut dt = Table::new(&["observable", "eps", "dispersion"]);
    let mut ext = Table::new(&["observable", "extrapolated"]);
    let mut results = serde_json::Map::new();
    for (name, f) in OBSERVABLES {
        let table = classical_dispersion(&e, t, &f, &eps).map_err(|e| CliError::config("eps", e.to_string()))?;
        for &(w, v) in &table.rows {
            dt.push(vec![name.into(), w.into(), v.into()]);
        }
        ext.push(vec![name.into(), table.extrapolated.into()]);
        results.insert(format!("dispersion_{name}"), json!(table.extrapolated));
    }
    sink.table("dispersion", &dt)?;
    sink.table("dispersion_extrapolated", &ext)?;
    results.insert("gaps".into(), json!(gaps.iter().map(|g| g.1).collect::<Vec<_>>()));
    Ok(Value::Object(results))
}

fn coord_cells(lat: &Lattice, i: usize) -> Vec<Cell> {
    (0..lat.dim()).map(|a| Cell::F(lat.coord(i, a))).collect()
}

fn field_table(lat: &Lattice, values: &[f64]) -> Table {
    let mut t = Table::new(if lat.dim() == 1 { &["x", "value"] } else { &["x", "y", "value"] });
    for (i, &v) in values.iter().enumerate() {
        let mut row = coord_cells(lat, i);
        row.push(v.into());
        t.push(row);
    }
    t
}

/// Deterministic square patch of starting points for 2D runs.
fn patch(particles: usize) -> Vec<Vec<f64>> {
    let k = (particles as f64).sqrt().ceil().max(1.0) as usize;
    let at = |j: usize| if k == 1 { 0.0 } else { -1.5 + 3.0 * j as f64 / (k - 1) as f64 };
    (0..particles).map(|p| vec![at(p % k), at(p / k)]).collect()
}

fn bohm_evolve(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let name = get(&cfg.preset);
    preset_timing(&name).map_err(|e| CliError::config("preset", e.to_string()))?;
    let dim = get(&cfg.dim);
    require(dim == 1 || dim == 2, "dim", "must be 1 or 2")?;
    let grid_points = get(&cfg.grid_points);
    require(grid_points >= 16, "grid_points", "need at least 16 nodes per axis")?;
    let dt = get(&cfg.dt);
    require(dt > 0.0, "dt", "must be positive")?;
    let t_end = get(&cfg.t_end);
    require(t_end > 0.0, "t_end", "must be positive")?;
    let save_every = get(&cfg.save_every);
    require(save_every >= 1, "save_every", "must be at least 1")?;
    let steps = (t_end / dt).round().max(1.0) as usize;
    let params = PresetParams {
        grid_points,
        dim,
        p0: get(&cfg.p0),
        mass: 1.0,
        hbar: 1.0,
    };
    let p = wave_preset(&name, &params)?;
    for half in [dt, 0.5 * dt] {
        if Propagator::new(&p.wave, &p.potential, half)?.guard_exceeded() {
            return Err(CliError::Guard(format!(
                "potential phase per half-step exceeds {} at dt = {half}; reduce dt",
                wave::POTENTIAL_PHASE_GUARD
            )));
        }
    }
    let seed = get(&cfg.seed);
    let mut results = serde_json::Map::new();

    let final_wave = if get(&cfg.trajectories) {
        let particles = get(&cfg.particles);
        require(particles >= 1, "particles", "need at least one particle")?;
        let (initial, law) = if dim == 1 {
            let x = sample_born_positions(&p.wave, particles, seed)?;
            (x.into_iter().map(|x| vec![x]).collect(), InitialLaw::Born { seed })
        } else {
            (patch(particles), InitialLaw::Explicit)
        };
        let opts = TrajectoryOptions { dt, steps, save_every };
        let (set, w) = integrate_trajectories(&p.wave, &p.potential, &initial, opts, law)?;
        let header: &[&str] = if dim == 1 { &["t", "particle", "x"] } else { &["t", "particle", "x", "y"] };
        let mut t = Table::new(header);
        for (s, &time) in set.times.iter().enumerate() {
            for k in 0..set.particles {
                let x = set.position(s, k);
                if x[0].is_nan() {
                    continue;
                }
                let mut row = vec![Cell::F(time), k.into()];
                row.extend(x.iter().map(|&v| Cell::F(v)));
                t.push(row);
            }
        }
        sink.table("trajectories", &t)?;
        results.insert("exited".into(), json!(set.exited.iter().filter(|e| e.is_some()).count()));
        if set.times.len() >= 3 {
            results.insert("newton_residual".into(), json!(set.newton_residual()?));
        }
        if dim == 1 {
            results.insert("order_preserved".into(), json!(set.order_preserved()));
            let survivors = set.final_positions();
            if !survivors.is_empty() {
                results.insert("ks_distance".into(), json!(ks_distance(&survivors, &w)?));
                results.insert("ks_critical_1pct".into(), json!(ks_critical_1pct(survivors.len())));
            }
        }
        w
    } else {
        evolve(&p.wave, &p.potential, dt, steps)?
    };
    results.insert("t".into(), json!(final_wave.time));
    results.insert("norm".into(), json!(final_wave.norm()));
    results.insert("boundary_density".into(), json!(final_wave.boundary_density()));
    for axis in 0..dim {
        results.insert(format!("width_{axis}"), json!(final_wave.width(axis)));
    }
    if final_wave.boundary_density() > 1e-12 {
        log::warn!("boundary density {:e} exceeds 1e-12; enlarge the grid", final_wave.boundary_density());
    }

    if get(&cfg.fields) {
        let f = polar_decompose(&final_wave);
        let lat = &final_wave.lattice;
        sink.table("density", &field_table(lat, &f.density()))?;
        let s: Vec<f64> = f.s.iter().zip(&f.mask).map(|(&s, &m)| if m { 0.0 } else { s }).collect();
        sink.table("phase", &field_table(lat, &s))?;
        sink.table("quantum_potential", &field_table(lat, &quantum_potential(&f).values))?;
    }

    if get(&cfg.residuals) {
        let mut t = Table::new(&["t", "hj_rms", "hj_rms_unweighted", "continuity_rms", "continuity_rms_unweighted"]);
        let mut w = p.wave.clone();
        let prop = Propagator::new(&w, &p.potential, dt)?;
        let mut worst = 0.0f64;
        let mut done = 0;
        loop {
            let mut next = w.clone();
            prop.step(&mut next);
            let (a, b) = (polar_decompose(&w), polar_decompose(&next));
            let hj = hj_residual(&a, &b, &p.potential)?;
            let c = continuity_residual(&a, &b)?;
            worst = worst.max(hj.rms).max(c.rms);
            t.push(vec![
                w.time.into(),
                hj.rms.into(),
                hj.rms_unweighted.into(),
                c.rms.into(),
                c.rms_unweighted.into(),
            ]);
            if done + save_every > steps {
                break;
            }
            for _ in 0..save_every {
                prop.step(&mut w);
            }
            done += save_every;
        }
        sink.table("residuals", &t)?;
        results.insert("residual_rms_max".into(), json!(worst));
    }
    Ok(Value::Object(results))
}

fn two_particle(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let name = get(&cfg.preset);
    let n = get(&cfg.grid_points);
    require(n >= 16, "grid_points", "need at least 16 nodes per axis")?;
    let probes = get(&cfg.probes);
    require(probes >= 1, "probes", "need at least one probe")?;
    let tp = two_particle_preset(&name, n)?;
    let report = factorization_test(&tp, probes, get(&cfg.seed))?;

    let mut f = Table::new(&["verdict", "spread_v1", "spread_v2", "probes_used"]);
    f.push(vec![
        report.verdict.to_string().into(),
        report.spread_v1.into(),
        report.spread_v2.into(),
        report.probes_used.into(),
    ]);
    sink.table("factorization", &f)?;
    if let Some(w) = report.witness {
        let mut t = Table::new(&["particle", "fixed", "other_a", "other_b", "v_a", "v_b"]);
        t.push(vec![
            (w.particle as usize).into(),
            w.fixed.into(),
            w.other.0.into(),
            w.other.1.into(),
            w.velocities.0.into(),
            w.velocities.1.into(),
        ]);
        sink.table("witness", &t)?;
    }

    let (mut rho, mut v1, mut v2) = (
        Table::new(&["x", "y", "value"]),
        Table::new(&["x", "y", "value"]),
        Table::new(&["x", "y", "value"]),
    );
    for a in 0..tp.x1.len {
        for b in 0..tp.x2.len {
            let (x, y) = (tp.x1.coord(a), tp.x2.coord(b));
            let (u1, u2) = two_particle_velocities(&tp, x, y)?.value().unwrap_or((f64::NAN, f64::NAN));
            rho.push(vec![x.into(), y.into(), tp.density_at_node(a, b).into()]);
            v1.push(vec![x.into(), y.into(), u1.into()]);
            v2.push(vec![x.into(), y.into(), u2.into()]);
        }
    }
    sink.table("density", &rho)?;
    sink.table("velocity_v1", &v1)?;
    sink.table("velocity_v2", &v2)?;
    Ok(json!({
        "verdict": report.verdict.to_string(),
        "spread_v1": report.spread_v1,
        "spread_v2": report.spread_v2,
        "probes_used": report.probes_used,
    }))
}
