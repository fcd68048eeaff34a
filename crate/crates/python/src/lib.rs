//! Python bindings: spin correlations, hidden-variable estimates, the
//! dispersion checks and the pilot-wave tools.

use hvbench::bohmian as bohm;
use hvbench::correlations::{self as corr, CorrelationModel};
use hvbench::ensembles as ens;
use hvbench::lhv;
use hvbench::spin_algebra as spin;
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Direction", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyDirection(spin::Direction);

#[pymethods]
impl PyDirection {
    #[new]
    fn new(x: f64, y: f64, z: f64) -> PyResult<Self> {
        spin::Direction::new(x, y, z).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_polar(theta: f64, phi: f64) -> Self {
        Self(spin::Direction::from_polar(theta, phi))
    }

    #[staticmethod]
    fn in_xz_plane(theta: f64) -> Self {
        Self(spin::Direction::in_xz_plane(theta))
    }

    #[getter]
    fn components(&self) -> [f64; 3] {
        self.0.components()
    }

    fn dot(&self, other: &PyDirection) -> f64 {
        self.0.dot(&other.0)
    }

    fn angle_to(&self, other: &PyDirection) -> f64 {
        self.0.angle_to(&other.0)
    }

    fn __repr__(&self) -> String {
        let [x, y, z] = self.0.components();
        format!("Direction({x}, {y}, {z})")
    }
}

#[pyclass(name = "MeterSettings", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PySettings(corr::MeterSettings);

#[pymethods]
impl PySettings {
    #[new]
    fn new(a: PyDirection, a_prime: PyDirection, b: PyDirection, b_prime: PyDirection) -> Self {
        Self(corr::MeterSettings {
            a: a.0,
            a_prime: a_prime.0,
            b: b.0,
            b_prime: b_prime.0,
        })
    }

    #[getter]
    fn a(&self) -> PyDirection {
        PyDirection(self.0.a)
    }

    #[getter]
    fn a_prime(&self) -> PyDirection {
        PyDirection(self.0.a_prime)
    }

    #[getter]
    fn b(&self) -> PyDirection {
        PyDirection(self.0.b)
    }

    #[getter]
    fn b_prime(&self) -> PyDirection {
        PyDirection(self.0.b_prime)
    }
}

fn model(name: &str) -> PyResult<CorrelationModel> {
    CorrelationModel::from_name(name).map_err(err)
}

#[pyfunction]
fn singlet_correlation(a: PyDirection, b: PyDirection) -> f64 {
    corr::singlet_correlation(&a.0, &b.0)
}

#[pyfunction]
fn mixture_correlation(a: PyDirection, b: PyDirection) -> f64 {
    corr::mixture_correlation(&a.0, &b.0)
}

#[pyfunction]
fn interference_terms(a: PyDirection, b: PyDirection) -> f64 {
    corr::interference_terms(&a.0, &b.0)
}

/// CHSH combination for `"singlet"` or `"mixture"`.
#[pyfunction]
fn chsh(model_name: &str, settings: PySettings) -> PyResult<f64> {
    Ok(corr::chsh(model(model_name)?, &settings.0))
}

#[pyfunction]
fn bell_config(theta: f64) -> PySettings {
    PySettings(corr::bell_config(theta))
}

#[pyfunction]
fn mixture_lhs(theta: f64) -> f64 {
    corr::mixture_lhs(theta)
}

/// Returns `(records, estimate, stderr)` with records `(index, label, A, B)`.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn sample_trials(
    py: Python<'_>,
    model_name: &str,
    a: PyDirection,
    b: PyDirection,
    n: usize,
    seed: u64,
) -> PyResult<(Vec<(usize, String, i8, i8)>, f64, f64)> {
    let m = model(model_name)?;
    let s = py.detach(|| corr::sample_trials(m, &a.0, &b.0, n, seed)).map_err(err)?;
    let records = s
        .records
        .iter()
        .map(|r| (r.index, r.label.to_string(), r.a_outcome, r.b_outcome))
        .collect();
    Ok((records, s.estimate, s.stderr))
}

#[pyfunction]
fn estimate_trials(py: Python<'_>, model_name: &str, a: PyDirection, b: PyDirection, n: usize, seed: u64) -> PyResult<(f64, f64)> {
    let m = model(model_name)?;
    py.detach(|| corr::estimate_trials(m, &a.0, &b.0, n, seed)).map_err(err)
}

#[pyfunction]
fn lhv_models() -> Vec<&'static str> {
    lhv::MODEL_NAMES.to_vec()
}

/// Monte Carlo `(mean, stderr)` of `A·B` for a registered model.
#[pyfunction]
fn lhv_estimate(py: Python<'_>, model_name: &str, a: PyDirection, b: PyDirection, n: usize, seed: u64) -> PyResult<(f64, f64)> {
    let m = lhv::model_by_name(model_name).map_err(err)?;
    let e = py.detach(|| lhv::estimate_correlation(m.as_ref(), &a.0, &b.0, n, seed)).map_err(err)?;
    Ok((e.mean, e.stderr))
}

#[pyfunction]
fn lhv_chsh(py: Python<'_>, model_name: &str, settings: PySettings, n: usize, seed: u64) -> PyResult<(f64, f64)> {
    let m = lhv::model_by_name(model_name).map_err(err)?;
    let e = py.detach(|| lhv::chsh_of_model(m.as_ref(), &settings.0, n, seed)).map_err(err)?;
    Ok((e.mean, e.stderr))
}

fn operator(rows: Vec<Vec<Complex64>>) -> PyResult<spin::Operator> {
    spin::Operator::from_rows(rows).map_err(err)
}

/// `Tr(ρR²) − 2Tr(ρR)² + Tr(ρR)²Tr(ρ)` for nested-list matrices.
#[pyfunction]
fn von_neumann_gap(rho: Vec<Vec<Complex64>>, r: Vec<Vec<Complex64>>) -> PyResult<f64> {
    let rho = spin::DensityMatrix::new(operator(rho)?).map_err(err)?;
    ens::von_neumann_gap(&rho, &operator(r)?).map_err(err)
}

#[pyfunction]
fn gap_table(dims: Vec<usize>) -> PyResult<Vec<(usize, f64)>> {
    ens::gap_table(&dims).map_err(err)
}

#[pyfunction]
fn dispersion(psi: Vec<Complex64>, r: Vec<Vec<Complex64>>) -> PyResult<f64> {
    let psi = spin::StateVector::normalized(psi).map_err(err)?;
    spin::dispersion(&psi, &operator(r)?).map_err(err)
}

type Observable = fn(&[f64], &[f64]) -> f64;

fn observable(name: &str) -> PyResult<Observable> {
    Ok(match name {
        "x" => |x, _| x[0],
        "p" => |_, p| p[0],
        "x^2" => |x, _| x[0] * x[0],
        "xp" => |x, p| x[0] * p[0],
        other => return Err(err(format!("unknown observable `{other}` (x, p, x^2, xp)"))),
    })
}

/// Smeared dispersion of a named observable for one free particle.
/// Returns `(rows, extrapolated)` with rows `(eps, dispersion)`.
#[pyfunction]
#[pyo3(signature = (name, x0, p0, t, eps = None))]
fn classical_dispersion(name: &str, x0: f64, p0: f64, t: f64, eps: Option<Vec<f64>>) -> PyResult<(Vec<(f64, f64)>, f64)> {
    let f = observable(name)?;
    let e = ens::TrajectoryEnsemble::free_particle(x0, p0, 1.0).map_err(err)?;
    let eps = eps.unwrap_or_else(|| ens::DEFAULT_EPSILONS.to_vec());
    let table = ens::classical_dispersion(&e, t, &f, &eps).map_err(err)?;
    Ok((table.rows, table.extrapolated))
}

/// `∫ ρ` of the smeared coincidence density for one free particle.
#[pyfunction]
fn integrate_coincidence(x0: f64, p0: f64, t: f64, eps: f64) -> PyResult<f64> {
    let e = ens::TrajectoryEnsemble::free_particle(x0, p0, 1.0).map_err(err)?;
    ens::integrate_coincidence(&e, t, eps).map_err(err)
}

/// A wave on its lattice together with the potential it evolves in.
#[pyclass(name = "Wave", from_py_object)]
#[derive(Clone)]
struct PyWave {
    wave: bohm::WaveGrid,
    potential: Vec<f64>,
}

#[pymethods]
impl PyWave {
    #[getter]
    fn time(&self) -> f64 {
        self.wave.time
    }

    #[getter]
    fn dim(&self) -> usize {
        self.wave.lattice.dim()
    }

    fn norm(&self) -> f64 {
        self.wave.norm()
    }

    #[pyo3(signature = (axis = 0))]
    fn width(&self, axis: usize) -> f64 {
        self.wave.width(axis)
    }

    #[pyo3(signature = (axis = 0))]
    fn mean_position(&self, axis: usize) -> f64 {
        self.wave.mean_position(axis)
    }

    fn density(&self) -> Vec<f64> {
        self.wave.density()
    }

    /// Node coordinates along `axis`.
    #[pyo3(signature = (axis = 0))]
    fn coords(&self, axis: usize) -> Vec<f64> {
        let lat = &self.wave.lattice;
        (0..lat.len()).map(|i| lat.coord(i, axis)).collect()
    }

    fn quantum_potential(&self) -> Vec<f64> {
        bohm::quantum_potential(&bohm::polar_decompose(&self.wave)).values
    }

    fn evolve(&self, py: Python<'_>, dt: f64, steps: usize) -> PyResult<PyWave> {
        let w = py.detach(|| bohm::evolve(&self.wave, &self.potential, dt, steps)).map_err(err)?;
        Ok(PyWave {
            wave: w,
            potential: self.potential.clone(),
        })
    }

    /// `(hj_rms, continuity_rms)` between this wave and one step `dt` later.
    fn residuals(&self, dt: f64) -> PyResult<(f64, f64)> {
        let next = bohm::evolve(&self.wave, &self.potential, dt, 1).map_err(err)?;
        let (a, b) = (bohm::polar_decompose(&self.wave), bohm::polar_decompose(&next));
        let hj = bohm::hj_residual(&a, &b, &self.potential).map_err(err)?;
        let c = bohm::continuity_residual(&a, &b).map_err(err)?;
        Ok((hj.rms, c.rms))
    }

    fn sample_born(&self, n: usize, seed: u64) -> PyResult<Vec<f64>> {
        bohm::sample_born_positions(&self.wave, n, seed).map_err(err)
    }

    fn ks_distance(&self, samples: Vec<f64>) -> PyResult<f64> {
        bohm::ks_distance(&samples, &self.wave).map_err(err)
    }

    /// Guidance trajectories; returns `(times, positions, final_wave)` with
    /// one row of `particles × dim` coordinates per saved time.
    #[pyo3(signature = (initial, dt, steps, save_every = 1))]
    #[allow(clippy::type_complexity)]
    fn trajectories(
        &self,
        py: Python<'_>,
        initial: Vec<Vec<f64>>,
        dt: f64,
        steps: usize,
        save_every: usize,
    ) -> PyResult<(Vec<f64>, Vec<Vec<f64>>, PyWave)> {
        let opts = bohm::TrajectoryOptions { dt, steps, save_every };
        let (set, w) = py
            .detach(|| bohm::integrate_trajectories(&self.wave, &self.potential, &initial, opts, bohm::InitialLaw::Explicit))
            .map_err(err)?;
        Ok((
            set.times,
            set.positions,
            PyWave {
                wave: w,
                potential: self.potential.clone(),
            },
        ))
    }
}

#[pyfunction]
#[pyo3(signature = (name, grid_points = 2048, dim = 1, p0 = 0.0))]
fn wave_preset(name: &str, grid_points: usize, dim: usize, p0: f64) -> PyResult<PyWave> {
    let p = bohm::wave_preset(
        name,
        &bohm::PresetParams {
            grid_points,
            dim,
            p0,
            ..Default::default()
        },
    )
    .map_err(err)?;
    Ok(PyWave {
        wave: p.wave,
        potential: p.potential,
    })
}

#[pyfunction]
fn ks_critical_1pct(n: usize) -> f64 {
    bohm::ks_critical_1pct(n)
}

#[pyclass(name = "TwoParticleWave", frozen)]
struct PyTwoParticle(bohm::TwoParticleWave);

#[pymethods]
impl PyTwoParticle {
    /// `(v1, v2)` or `None` where the density is below the floor.
    fn velocities(&self, x1: f64, x2: f64) -> PyResult<Option<(f64, f64)>> {
        Ok(bohm::two_particle_velocities(&self.0, x1, x2).map_err(err)?.value())
    }

    /// `(verdict, spread_v1, spread_v2, probes_used)`.
    fn factorization_test(&self, probes: usize, seed: u64) -> PyResult<(String, f64, f64, usize)> {
        let r = bohm::factorization_test(&self.0, probes, seed).map_err(err)?;
        Ok((r.verdict.to_string(), r.spread_v1, r.spread_v2, r.probes_used))
    }
}

#[pyfunction]
#[pyo3(signature = (name, grid_points = 256))]
fn two_particle_preset(name: &str, grid_points: usize) -> PyResult<PyTwoParticle> {
    bohm::two_particle_preset(name, grid_points).map(PyTwoParticle).map_err(err)
}

/// Runs the command-line front end with `args` (without the program name).
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> i32 {
    py.detach(|| hvbench::cli::main_with_args(std::iter::once("hvbench".to_string()).chain(args)))
}

#[pymodule]
fn hvbench_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyDirection>()?;
    m.add_class::<PySettings>()?;
    m.add_class::<PyWave>()?;
    m.add_class::<PyTwoParticle>()?;
    m.add_function(wrap_pyfunction!(singlet_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(mixture_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(interference_terms, m)?)?;
    m.add_function(wrap_pyfunction!(chsh, m)?)?;
    m.add_function(wrap_pyfunction!(bell_config, m)?)?;
    m.add_function(wrap_pyfunction!(mixture_lhs, m)?)?;
    m.add_function(wrap_pyfunction!(sample_trials, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_trials, m)?)?;
    m.add_function(wrap_pyfunction!(lhv_models, m)?)?;
    m.add_function(wrap_pyfunction!(lhv_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(lhv_chsh, m)?)?;
    m.add_function(wrap_pyfunction!(von_neumann_gap, m)?)?;
    m.add_function(wrap_pyfunction!(gap_table, m)?)?;
    m.add_function(wrap_pyfunction!(dispersion, m)?)?;
    m.add_function(wrap_pyfunction!(classical_dispersion, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_coincidence, m)?)?;
    m.add_function(wrap_pyfunction!(wave_preset, m)?)?;
    m.add_function(wrap_pyfunction!(ks_critical_1pct, m)?)?;
    m.add_function(wrap_pyfunction!(two_particle_preset, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
