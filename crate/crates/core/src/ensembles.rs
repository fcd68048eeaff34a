//! Dispersion-free phase-space ensembles and the finite-dimensional
//! von Neumann gap.
//!
//! An ensemble of `N` systems following sharp trajectories has the density
//! `Π δ(x_i − x_i⁰(t)) δ(p_i − p_i⁰(t))`. Its Wigner-Moyal transform is
//! `Π δ(x_i − x_i⁰(t)) exp[(i/ħ) p_i⁰(t)·Δx_i]`. The deltas are realized as
//! normalized Gaussians of width ε; statements about the ε → 0 limit are
//! checked by Richardson extrapolation over a geometric ε sequence.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::spin_algebra::{trace_expectation, DensityMatrix, Operator, StateVector};

/// Half-width of the quadrature box, in units of ε.
pub const BOX_HALF_WIDTH: f64 = 8.0;
/// Quadrature nodes per ε along each axis.
pub const NODES_PER_EPS: usize = 8;
/// Step of the central difference used to read momentum off the phase.
pub const PHASE_STEP: f64 = 1e-5;
/// Largest total coordinate count integrated by tensor-product quadrature.
pub const MAX_QUADRATURE_DIM: usize = 3;

/// Default ε sequence (ratio ½).
pub const DEFAULT_EPSILONS: [f64; 3] = [0.1, 0.05, 0.025];

/// A sharp phase-space trajectory `(x⁰(t), p⁰(t))`.
pub trait PhasePath: Send + Sync {
    fn dim(&self) -> usize;
    fn position(&self, t: f64) -> Vec<f64>;
    fn momentum(&self, t: f64) -> Vec<f64>;
}

/// Free motion `x⁰(t) = x₀ + p₀ t / m`.
#[derive(Debug, Clone)]
pub struct FreePath {
    pub x0: Vec<f64>,
    pub p0: Vec<f64>,
    pub mass: f64,
}

impl PhasePath for FreePath {
    fn dim(&self) -> usize {
        self.x0.len()
    }

    fn position(&self, t: f64) -> Vec<f64> {
        self.x0
            .iter()
            .zip(&self.p0)
            .map(|(x, p)| x + p * t / self.mass)
            .collect()
    }

    fn momentum(&self, _t: f64) -> Vec<f64> {
        self.p0.clone()
    }
}

/// Isotropic harmonic oscillator orbit.
#[derive(Debug, Clone)]
pub struct HarmonicPath {
    pub x0: Vec<f64>,
    pub p0: Vec<f64>,
    pub mass: f64,
    pub omega: f64,
}

impl PhasePath for HarmonicPath {
    fn dim(&self) -> usize {
        self.x0.len()
    }

    fn position(&self, t: f64) -> Vec<f64> {
        let (c, s) = ((self.omega * t).cos(), (self.omega * t).sin());
        let mw = self.mass * self.omega;
        self.x0
            .iter()
            .zip(&self.p0)
            .map(|(x, p)| x * c + p / mw * s)
            .collect()
    }

    fn momentum(&self, t: f64) -> Vec<f64> {
        let (c, s) = ((self.omega * t).cos(), (self.omega * t).sin());
        let mw = self.mass * self.omega;
        self.x0
            .iter()
            .zip(&self.p0)
            .map(|(x, p)| p * c - x * mw * s)
            .collect()
    }
}

/// One system per path; ħ only enters through the Wigner-Moyal phase.
#[derive(Clone)]
pub struct TrajectoryEnsemble {
    paths: Vec<Arc<dyn PhasePath>>,
    hbar: f64,
}

/// Positions and momenta of every system at one instant, flattened.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub positions: Vec<f64>,
    pub momenta: Vec<f64>,
    pub hbar: f64,
}

impl TrajectoryEnsemble {
    pub fn new(paths: Vec<Arc<dyn PhasePath>>, hbar: f64) -> Result<Self> {
        if paths.is_empty() {
            return Err(invalid("paths", "ensemble needs at least one system"));
        }
        if !(hbar > 0.0) {
            return Err(invalid("hbar", format!("must be positive, got {hbar}")));
        }
        Ok(Self { paths, hbar })
    }

    /// Single free particle in one dimension.
    pub fn free_particle(x0: f64, p0: f64, hbar: f64) -> Result<Self> {
        Self::new(
            vec![Arc::new(FreePath {
                x0: vec![x0],
                p0: vec![p0],
                mass: 1.0,
            })],
            hbar,
        )
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Total number of position coordinates over all systems.
    pub fn coordinate_count(&self) -> usize {
        self.paths.iter().map(|p| p.dim()).sum()
    }

    pub fn snapshot(&self, t: f64) -> Result<Snapshot> {
        let mut positions = Vec::with_capacity(self.coordinate_count());
        let mut momenta = Vec::with_capacity(self.coordinate_count());
        for p in &self.paths {
            let x = p.position(t);
            let q = p.momentum(t);
            if x.len() != p.dim() || q.len() != p.dim() {
                return Err(Error::DimensionMismatch {
                    expected: p.dim(),
                    found: x.len().max(q.len()),
                });
            }
            positions.extend(x);
            momenta.extend(q);
        }
        if positions.iter().chain(&momenta).any(|v| !v.is_finite()) {
            return Err(invalid("t", format!("trajectory not finite at t = {t}")));
        }
        Ok(Snapshot {
            positions,
            momenta,
            hbar: self.hbar,
        })
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid("eps", format!("smearing width must be positive, got {eps}")));
    }
    Ok(())
}

/// Normalized Gaussian of width ε standing in for δ(u).
pub fn smeared_delta(u: f64, eps: f64) -> f64 {
    (-0.5 * (u / eps).powi(2)).exp() / ((2.0 * PI).sqrt() * eps)
}

impl Snapshot {
    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.positions.len() {
            return Err(Error::DimensionMismatch {
                expected: self.positions.len(),
                found: v.len(),
            });
        }
        Ok(())
    }

    pub fn coincidence_density(&self, x: &[f64], eps: f64) -> Result<f64> {
        check_eps(eps)?;
        self.check_len(x)?;
        Ok(x.iter()
            .zip(&self.positions)
            .map(|(xi, x0)| smeared_delta(xi - x0, eps))
            .product())
    }

    pub fn wigner_moyal(&self, x: &[f64], dx: &[f64], eps: f64) -> Result<Complex64> {
        let modulus = self.coincidence_density(x, eps)?;
        self.check_len(dx)?;
        let phase: f64 = self.momenta.iter().zip(dx).map(|(p, d)| p * d).sum::<f64>() / self.hbar;
        Ok(Complex64::from_polar(modulus, phase))
    }

    /// `ħ ∂ arg ρ(x, Δx) / ∂Δx_k` at Δx = 0 by central difference.
    pub fn momentum_from_phase(&self, x: &[f64], eps: f64) -> Result<Vec<f64>> {
        let n = self.positions.len();
        let mut out = Vec::with_capacity(n);
        let mut dx = vec![0.0; n];
        for k in 0..n {
            dx[k] = PHASE_STEP;
            let plus = self.wigner_moyal(x, &dx, eps)?;
            dx[k] = -PHASE_STEP;
            let minus = self.wigner_moyal(x, &dx, eps)?;
            dx[k] = 0.0;
            // arg of the ratio avoids branch cuts
            let dphase = (plus * minus.conj()).arg();
            out.push(self.hbar * dphase / (2.0 * PHASE_STEP));
        }
        Ok(out)
    }

    /// Tensor trapezoid over `±8ε` boxes around the trajectory point,
    /// integrating `g(x)` for every node `x`.
    fn quadrature<G>(&self, eps: f64, mut g: G) -> Result<()>
    where
        G: FnMut(&[f64], f64) -> Result<()>,
    {
        check_eps(eps)?;
        let dim = self.positions.len();
        if dim > MAX_QUADRATURE_DIM {
            return Err(invalid(
                "ensemble",
                format!("{dim} coordinates exceed the quadrature limit {MAX_QUADRATURE_DIM}"),
            ));
        }
        let per_axis = 2 * (BOX_HALF_WIDTH as usize) * NODES_PER_EPS + 1;
        let h = eps / NODES_PER_EPS as f64;
        let cell = h.powi(dim as i32);
        let mut idx = vec![0usize; dim];
        let mut x = vec![0.0; dim];
        loop {
            let mut w = cell;
            for k in 0..dim {
                x[k] = self.positions[k] - BOX_HALF_WIDTH * eps + idx[k] as f64 * h;
                if idx[k] == 0 || idx[k] == per_axis - 1 {
                    w *= 0.5;
                }
            }
            g(&x, w)?;
            // odometer over the tensor grid
            let mut k = 0;
            loop {
                if k == dim {
                    return Ok(());
                }
                idx[k] += 1;
                if idx[k] < per_axis {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    pub fn integrate_coincidence(&self, eps: f64) -> Result<f64> {
        let mut total = 0.0;
        self.quadrature(eps, |x, w| {
            total += w * self.coincidence_density(x, eps)?;
            Ok(())
        })?;
        Ok(total)
    }

    /// Integral of `Re ρ(x, Δx)` along `Δx = h·(1, …, 1)` for each step `h`,
    /// extrapolated to `h → 0`. The other route to the "trace" of the
    /// ensemble, independent of [`Snapshot::integrate_coincidence`].
    pub fn trace_via_limit(&self, eps: f64, steps: &[f64]) -> Result<f64> {
        let n = self.positions.len();
        let mut values = Vec::with_capacity(steps.len());
        for &h in steps {
            let dx = vec![h; n];
            let mut total = 0.0;
            self.quadrature(eps, |x, w| {
                total += w * self.wigner_moyal(x, &dx, eps)?.re;
                Ok(())
            })?;
            values.push(total);
        }
        let sq: Vec<f64> = steps.iter().map(|h| h * h).collect();
        Ok(extrapolate_to_zero(&sq, &values))
    }

    /// `⟨f²⟩ − ⟨f⟩²` under the ε-smeared position density, with momentum
    /// read from the Wigner-Moyal phase at each node.
    pub fn smeared_dispersion<F>(&self, f: &F, eps: f64) -> Result<f64>
    where
        F: Fn(&[f64], &[f64]) -> f64 + ?Sized,
    {
        let (mut w_sum, mut f_sum, mut f2_sum) = (0.0, 0.0, 0.0);
        // values are shifted by f at the trajectory point
        let shift = {
            let p = self.momentum_from_phase(&self.positions, eps)?;
            f(&self.positions, &p)
        };
        self.quadrature(eps, |x, w| {
            let weight = w * self.coincidence_density(x, eps)?;
            let p = self.momentum_from_phase(x, eps)?;
            let v = f(x, &p) - shift;
            w_sum += weight;
            f_sum += weight * v;
            f2_sum += weight * v * v;
            Ok(())
        })?;
        let mean = f_sum / w_sum;
        Ok(f2_sum / w_sum - mean * mean)
    }
}

pub fn wigner_moyal(
    e: &TrajectoryEnsemble,
    t: f64,
    x: &[f64],
    dx: &[f64],
    eps: f64,
) -> Result<Complex64> {
    check_eps(eps)?;
    e.snapshot(t)?.wigner_moyal(x, dx, eps)
}

/// The Δx → 0 density `Π δ_ε(x_i − x_i⁰(t))`.
pub fn coincidence_density(e: &TrajectoryEnsemble, t: f64, x: &[f64], eps: f64) -> Result<f64> {
    check_eps(eps)?;
    e.snapshot(t)?.coincidence_density(x, eps)
}

pub fn integrate_coincidence(e: &TrajectoryEnsemble, t: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    e.snapshot(t)?.integrate_coincidence(eps)
}

/// Polynomial (Neville) extrapolation of `values(h)` to `h = 0`.
pub fn extrapolate_to_zero(h: &[f64], values: &[f64]) -> f64 {
    assert_eq!(h.len(), values.len());
    let mut p = values.to_vec();
    let n = p.len();
    for m in 1..n {
        for i in 0..(n - m) {
            p[i] = (h[i + m] * p[i] - h[i] * p[i + 1]) / (h[i + m] - h[i]);
        }
    }
    p[0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionTable {
    /// `(ε, dispersion at ε)`
    pub rows: Vec<(f64, f64)>,
    /// Richardson extrapolant in ε² to ε → 0.
    pub extrapolated: f64,
}

/// Dispersion of the phase-space observable `f(x, p)` for each ε in a
/// strictly decreasing sequence (at least three terms), extrapolated to ε → 0.
pub fn classical_dispersion<F>(
    e: &TrajectoryEnsemble,
    t: f64,
    f: &F,
    eps_seq: &[f64],
) -> Result<DispersionTable>
where
    F: Fn(&[f64], &[f64]) -> f64 + ?Sized,
{
    if eps_seq.len() < 3 {
        return Err(invalid("eps", "need at least three smearing widths"));
    }
    if eps_seq.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("eps", "smearing widths must be strictly decreasing"));
    }
    for &eps in eps_seq {
        check_eps(eps)?;
    }
    let snap = e.snapshot(t)?;
    let mut rows = Vec::with_capacity(eps_seq.len());
    for &eps in eps_seq {
        rows.push((eps, snap.smeared_dispersion(f, eps)?));
    }
    let h: Vec<f64> = eps_seq.iter().map(|e| e * e).collect();
    let v: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(DispersionTable {
        extrapolated: extrapolate_to_zero(&h, &v),
        rows,
    })
}

/// `Tr(ρR²) − 2 Tr(ρR)² + Tr(ρR)² Tr(ρ)`: the left side of the
/// dispersion-free condition once `ρ` is not assumed normalized.
pub fn von_neumann_gap(rho: &DensityMatrix, r: &Operator) -> Result<f64> {
    r.ensure_hermitian()?;
    let mean = trace_expectation(rho, r)?;
    let mean_sq = trace_expectation(rho, &r.matmul(r)?)?;
    let norm = trace_expectation(rho, &Operator::identity(rho.dim()))?;
    Ok(mean_sq - 2.0 * mean * mean + mean * mean * norm)
}

/// `(⟨φ|ρ|φ⟩, ⟨φ|ρ|φ⟩²)`: the two sides of the projector condition.
pub fn projector_consistency(rho: &DensityMatrix, phi: &StateVector) -> Result<(f64, f64)> {
    let lhs = trace_expectation(rho, &Operator::projector(phi))?;
    Ok((lhs, lhs * lhs))
}

/// `(d, gap)` for `ρ = 1_d` and the rank-1 projector onto the first basis vector.
pub fn gap_table(dims: &[usize]) -> Result<Vec<(usize, f64)>> {
    dims.iter()
        .map(|&d| {
            if d == 0 {
                return Err(invalid("d", "dimension must be at least 1"));
            }
            let r = Operator::projector(&StateVector::basis(d, 0));
            Ok((d, von_neumann_gap(&DensityMatrix::identity(d), &r)?))
        })
        .collect()
}
