use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};

/// Uniform periodic lattice in one or two dimensions with equal spacing on
/// every axis. Nodes are stored row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    shape: Vec<usize>,
    origin: Vec<f64>,
    spacing: f64,
}

impl Lattice {
    pub fn new(shape: Vec<usize>, origin: Vec<f64>, spacing: f64) -> Result<Self> {
        if shape.is_empty() || shape.len() > 2 {
            return Err(invalid("dimension", format!("must be 1 or 2, got {}", shape.len())));
        }
        if origin.len() != shape.len() {
            return Err(Error::DimensionMismatch {
                expected: shape.len(),
                found: origin.len(),
            });
        }
        if shape.iter().any(|&n| n < 4) {
            return Err(invalid("grid", "every axis needs at least 4 nodes"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(invalid("spacing", format!("must be positive, got {spacing}")));
        }
        Ok(Self {
            shape,
            origin,
            spacing,
        })
    }

    /// `n` nodes per axis covering `[-half_width, half_width)` on each axis.
    pub fn centered(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![n; dim], vec![-half_width; dim], 2.0 * half_width / n as f64)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume element `Δxᵈ`.
    pub fn cell(&self) -> f64 {
        self.spacing.powi(self.dim() as i32)
    }

    fn stride(&self, axis: usize) -> usize {
        self.shape[axis + 1..].iter().product()
    }

    /// Multi-index of a flat node index.
    pub fn unravel(&self, idx: usize) -> [usize; 2] {
        match self.dim() {
            1 => [idx, 0],
            _ => [idx / self.shape[1], idx % self.shape[1]],
        }
    }

    pub fn coord(&self, idx: usize, axis: usize) -> f64 {
        let m = self.unravel(idx);
        self.origin[axis] + m[axis] as f64 * self.spacing
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        (0..self.dim()).map(|a| self.coord(idx, a)).collect()
    }

    /// Neighbor of `idx` displaced by `delta` nodes along `axis`, periodic.
    pub fn shift(&self, idx: usize, axis: usize, delta: isize) -> usize {
        let n = self.shape[axis] as isize;
        let stride = self.stride(axis);
        let m = self.unravel(idx)[axis] as isize;
        let moved = (m + delta).rem_euclid(n) as usize;
        idx - (m as usize) * stride + moved * stride
    }

    /// Last coordinate on an axis (the grid covers `[origin, upper]`).
    pub fn upper(&self, axis: usize) -> f64 {
        self.origin[axis] + (self.shape[axis] - 1) as f64 * self.spacing
    }

    /// Angular wave number of FFT bin `j` on `axis`.
    pub fn wave_number(&self, axis: usize, j: usize) -> f64 {
        let n = self.shape[axis];
        let f = if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 };
        2.0 * PI * f / (n as f64 * self.spacing)
    }

    /// Samples `f(x)` at every node.
    pub fn sample<T, F: Fn(&[f64]) -> T>(&self, f: F) -> Vec<T> {
        (0..self.len()).map(|i| f(&self.coords(i))).collect()
    }
}

/// Discretized wave function with its physical constants and clock.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveGrid {
    pub lattice: Lattice,
    pub psi: Vec<Complex64>,
    pub mass: f64,
    pub hbar: f64,
    pub time: f64,
}

impl WaveGrid {
    /// Builds and normalizes a wave function.
    pub fn new(lattice: Lattice, psi: Vec<Complex64>, mass: f64, hbar: f64) -> Result<Self> {
        if psi.len() != lattice.len() {
            return Err(Error::DimensionMismatch {
                expected: lattice.len(),
                found: psi.len(),
            });
        }
        if !(mass > 0.0) || !(hbar > 0.0) {
            return Err(invalid("mass/hbar", "must be positive"));
        }
        let mut w = Self {
            lattice,
            psi,
            mass,
            hbar,
            time: 0.0,
        };
        let n = w.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::NotNormalized { norm_sq: n });
        }
        let s = 1.0 / n.sqrt();
        w.psi.iter_mut().for_each(|z| *z *= s);
        Ok(w)
    }

    pub fn from_fn<F>(lattice: Lattice, mass: f64, hbar: f64, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let psi = lattice.sample(f);
        Self::new(lattice, psi, mass, hbar)
    }

    /// `Σ|Ψ|² Δxᵈ`
    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.lattice.cell()
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `⟨x_axis⟩` under `|Ψ|²`.
    pub fn mean_position(&self, axis: usize) -> f64 {
        let cell = self.lattice.cell();
        (0..self.psi.len())
            .map(|i| self.psi[i].norm_sqr() * self.lattice.coord(i, axis))
            .sum::<f64>()
            * cell
            / self.norm()
    }

    pub fn variance(&self, axis: usize) -> f64 {
        let mean = self.mean_position(axis);
        let cell = self.lattice.cell();
        (0..self.psi.len())
            .map(|i| self.psi[i].norm_sqr() * (self.lattice.coord(i, axis) - mean).powi(2))
            .sum::<f64>()
            * cell
            / self.norm()
    }

    /// Gaussian width parameter σ for `|Ψ|² ∝ exp(−x²/σ²)`, i.e. `√(2 Var x)`.
    pub fn width(&self, axis: usize) -> f64 {
        (2.0 * self.variance(axis)).sqrt()
    }

    /// Largest |Ψ|² over the first and last node of every axis.
    pub fn boundary_density(&self) -> f64 {
        let lat = &self.lattice;
        (0..self.psi.len())
            .filter(|&i| {
                let m = lat.unravel(i);
                (0..lat.dim()).any(|a| m[a] == 0 || m[a] == lat.shape()[a] - 1)
            })
            .map(|i| self.psi[i].norm_sqr())
            .fold(0.0, f64::max)
    }
}

/// Per-half-step potential threshold on `dt·max|V|/ħ`.
pub const POTENTIAL_PHASE_GUARD: f64 = 0.1;

/// Strang split-step propagator: half potential kick, exact kinetic step
/// in frequency space, half potential kick. Periodic boundaries.
pub struct Propagator {
    lattice: Lattice,
    dt: f64,
    potential_half: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    guard_exceeded: bool,
}

impl Propagator {
    pub fn new(w: &WaveGrid, potential: &[f64], dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        let lat = w.lattice.clone();
        if potential.len() != lat.len() {
            return Err(Error::DimensionMismatch {
                expected: lat.len(),
                found: potential.len(),
            });
        }
        let vmax = potential.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let guard = 0.5 * dt * vmax / w.hbar;
        let guard_exceeded = guard > POTENTIAL_PHASE_GUARD;
        if guard_exceeded {
            log::warn!(
                "potential phase per half-step {guard:.3} exceeds {POTENTIAL_PHASE_GUARD}; reduce dt"
            );
        }
        let potential_half = potential
            .iter()
            .map(|v| Complex64::from_polar(1.0, -0.5 * dt * v / w.hbar))
            .collect();
        let kinetic = (0..lat.len())
            .map(|i| {
                let m = lat.unravel(i);
                let k2: f64 = (0..lat.dim()).map(|a| lat.wave_number(a, m[a]).powi(2)).sum();
                Complex64::from_polar(1.0, -w.hbar * k2 * dt / (2.0 * w.mass))
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = lat.shape().iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = lat.shape().iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        Ok(Self {
            lattice: lat,
            dt,
            potential_half,
            kinetic,
            forward,
            inverse,
            guard_exceeded,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// True when the potential phase guard was exceeded at construction.
    pub fn guard_exceeded(&self) -> bool {
        self.guard_exceeded
    }

    pub fn step(&self, w: &mut WaveGrid) {
        for (z, p) in w.psi.iter_mut().zip(&self.potential_half) {
            *z *= p;
        }
        fft_nd(&self.lattice, &mut w.psi, &self.forward);
        for (z, k) in w.psi.iter_mut().zip(&self.kinetic) {
            *z *= k;
        }
        fft_nd(&self.lattice, &mut w.psi, &self.inverse);
        let scale = 1.0 / self.lattice.len() as f64;
        for (z, p) in w.psi.iter_mut().zip(&self.potential_half) {
            *z *= p * scale;
        }
        w.time += self.dt;
    }
}

/// Applies 1D transforms along every axis of a row-major array.
pub(crate) fn fft_nd(lat: &Lattice, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
    match lat.dim() {
        1 => plans[0].process(data),
        _ => {
            let (n0, n1) = (lat.shape()[0], lat.shape()[1]);
            // rows are contiguous along the fast axis
            plans[1].process(data);
            let mut column = vec![Complex64::new(0.0, 0.0); n0];
            for j in 0..n1 {
                for i in 0..n0 {
                    column[i] = data[i * n1 + j];
                }
                plans[0].process(&mut column);
                for i in 0..n0 {
                    data[i * n1 + j] = column[i];
                }
            }
        }
    }
}

/// Evolves `w` by `steps` split-steps of size `dt` under `potential`.
pub fn evolve(w: &WaveGrid, potential: &[f64], dt: f64, steps: usize) -> Result<WaveGrid> {
    let prop = Propagator::new(w, potential, dt)?;
    let mut out = w.clone();
    for _ in 0..steps {
        prop.step(&mut out);
    }
    Ok(out)
}
