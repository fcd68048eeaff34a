//! Two-particle guidance with a finite component sum:
//! `dX_k/dt = (ħ/m) ρ⁻¹ Im Σ_ij Ψ*_ij ∂Ψ_ij/∂X_k`, `ρ = Σ_ij |Ψ_ij|²`.
//!
//! States are snapshots prepared analytically (or from samples, with
//! spectral derivatives); nothing here evolves them.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;

use super::polar::R_FLOOR;
use crate::error::{invalid, Error, Result};

/// Uniform 1D axis `origin + j·spacing`, `j < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub origin: f64,
    pub spacing: f64,
    pub len: usize,
}

impl Axis {
    pub fn centered(len: usize, half_width: f64) -> Self {
        Self {
            origin: -half_width,
            spacing: 2.0 * half_width / len as f64,
            len,
        }
    }

    pub fn coord(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.spacing
    }

    pub fn upper(&self) -> f64 {
        self.coord(self.len - 1)
    }

    /// Left node and fractional offset for linear interpolation.
    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        if !(x >= self.origin && x <= self.upper()) {
            return None;
        }
        let u = (x - self.origin) / self.spacing;
        let i = (u.floor() as usize).min(self.len - 2);
        Some((i, u - i as f64))
    }
}

/// One component sampled with its partial derivatives, row-major in (X₁, X₂).
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub values: Vec<Complex64>,
    pub d1: Vec<Complex64>,
    pub d2: Vec<Complex64>,
}

/// Value and partial derivatives `(Ψ, ∂Ψ/∂X₁, ∂Ψ/∂X₂)` at a point.
pub type AnalyticComponent = Arc<dyn Fn(f64, f64) -> (Complex64, Complex64, Complex64) + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub struct TwoParticleWave {
    pub x1: Axis,
    pub x2: Axis,
    pub components: Vec<Component>,
    pub mass: f64,
    pub hbar: f64,
    /// derived ρ and currents `Im Σ Ψ* ∂_k Ψ`
    rho: Vec<f64>,
    j1: Vec<f64>,
    j2: Vec<f64>,
    rho_floor: f64,
    rho_max: f64,
}

impl TwoParticleWave {
    fn assemble(x1: Axis, x2: Axis, mut components: Vec<Component>, mass: f64, hbar: f64) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("components", "need at least one component"));
        }
        if x1.len < 2 || x2.len < 2 {
            return Err(invalid("grid", "each axis needs at least two nodes"));
        }
        if !(mass > 0.0) || !(hbar > 0.0) {
            return Err(invalid("mass/hbar", "must be positive"));
        }
        let n = x1.len * x2.len;
        for c in &components {
            for v in [&c.values, &c.d1, &c.d2] {
                if v.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: v.len(),
                    });
                }
            }
        }
        let cell = x1.spacing * x2.spacing;
        let total: f64 = components
            .iter()
            .flat_map(|c| c.values.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            * cell;
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::NotNormalized { norm_sq: total });
        }
        let s = 1.0 / total.sqrt();
        for c in components.iter_mut() {
            for v in [&mut c.values, &mut c.d1, &mut c.d2] {
                v.iter_mut().for_each(|z| *z *= s);
            }
        }
        let mut rho = vec![0.0; n];
        let mut j1 = vec![0.0; n];
        let mut j2 = vec![0.0; n];
        for c in &components {
            for i in 0..n {
                rho[i] += c.values[i].norm_sqr();
                j1[i] += (c.values[i].conj() * c.d1[i]).im;
                j2[i] += (c.values[i].conj() * c.d2[i]).im;
            }
        }
        let rho_max = rho.iter().fold(0.0f64, |m, &v| m.max(v));
        Ok(Self {
            x1,
            x2,
            components,
            mass,
            hbar,
            rho,
            j1,
            j2,
            rho_floor: R_FLOOR * R_FLOOR * rho_max,
            rho_max,
        })
    }

    /// Samples analytic components (with exact derivatives) on the grid.
    pub fn from_analytic(
        x1: Axis,
        x2: Axis,
        components: &[AnalyticComponent],
        mass: f64,
        hbar: f64,
    ) -> Result<Self> {
        let comps = components
            .iter()
            .map(|f| {
                let mut c = Component {
                    values: Vec::with_capacity(x1.len * x2.len),
                    d1: Vec::with_capacity(x1.len * x2.len),
                    d2: Vec::with_capacity(x1.len * x2.len),
                };
                for a in 0..x1.len {
                    for b in 0..x2.len {
                        let (v, d1, d2) = f(x1.coord(a), x2.coord(b));
                        c.values.push(v);
                        c.d1.push(d1);
                        c.d2.push(d2);
                    }
                }
                c
            })
            .collect();
        Self::assemble(x1, x2, comps, mass, hbar)
    }

    /// Components from node samples; derivatives are spectral (periodic).
    pub fn from_samples(x1: Axis, x2: Axis, samples: Vec<Vec<Complex64>>, mass: f64, hbar: f64) -> Result<Self> {
        let comps = samples
            .into_iter()
            .map(|values| {
                if values.len() != x1.len * x2.len {
                    return Err(Error::DimensionMismatch {
                        expected: x1.len * x2.len,
                        found: values.len(),
                    });
                }
                let d1 = spectral_derivative(&values, x1, x2, 0);
                let d2 = spectral_derivative(&values, x1, x2, 1);
                Ok(Component { values, d1, d2 })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(x1, x2, comps, mass, hbar)
    }

    pub fn density_at_node(&self, a: usize, b: usize) -> f64 {
        self.rho[a * self.x2.len + b]
    }

    pub fn max_density(&self) -> f64 {
        self.rho_max
    }

    fn bilinear(&self, f: &[f64], (i, fx): (usize, f64), (j, fy): (usize, f64)) -> f64 {
        let n2 = self.x2.len;
        let at = |a: usize, b: usize| f[a * n2 + b];
        at(i, j) * (1.0 - fx) * (1.0 - fy)
            + at(i + 1, j) * fx * (1.0 - fy)
            + at(i, j + 1) * (1.0 - fx) * fy
            + at(i + 1, j + 1) * fx * fy
    }

    /// Interpolated density at a point.
    pub fn density(&self, x1: f64, x2: f64) -> Result<f64> {
        let (l1, l2) = self.locate(x1, x2)?;
        Ok(self.bilinear(&self.rho, l1, l2))
    }

    fn locate(&self, x1: f64, x2: f64) -> Result<((usize, f64), (usize, f64))> {
        match (self.x1.locate(x1), self.x2.locate(x2)) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::OutsideGrid(vec![x1, x2])),
        }
    }
}

/// Guidance velocities at a point, or `Masked` where ρ is below the floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Velocities {
    Value { v1: f64, v2: f64 },
    Masked,
}

impl Velocities {
    pub fn value(&self) -> Option<(f64, f64)> {
        match *self {
            Velocities::Value { v1, v2 } => Some((v1, v2)),
            Velocities::Masked => None,
        }
    }
}

/// Current and density are interpolated separately and divided afterwards,
/// which keeps the ratio exactly independent of X₂ for product states.
pub fn two_particle_velocities(tp: &TwoParticleWave, x1: f64, x2: f64) -> Result<Velocities> {
    let (l1, l2) = tp.locate(x1, x2)?;
    let rho = tp.bilinear(&tp.rho, l1, l2);
    if !(rho >= tp.rho_floor) || rho <= 0.0 {
        return Ok(Velocities::Masked);
    }
    let k = tp.hbar / tp.mass;
    Ok(Velocities::Value {
        v1: k * tp.bilinear(&tp.j1, l1, l2) / rho,
        v2: k * tp.bilinear(&tp.j2, l1, l2) / rho,
    })
}

fn spectral_derivative(values: &[Complex64], x1: Axis, x2: Axis, axis: usize) -> Vec<Complex64> {
    let (n1, n2) = (x1.len, x2.len);
    let (n, spacing) = if axis == 0 { (n1, x1.spacing) } else { (n2, x2.spacing) };
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let ik: Vec<Complex64> = (0..n)
        .map(|j| {
            // Nyquist bin has no odd-symmetric partner
            if n % 2 == 0 && j == n / 2 {
                return Complex64::new(0.0, 0.0);
            }
            let f = if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 };
            Complex64::new(0.0, 2.0 * std::f64::consts::PI * f / (n as f64 * spacing))
        })
        .collect();
    let mut out = values.to_vec();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let lines = if axis == 0 { n2 } else { n1 };
    for l in 0..lines {
        let idx = |k: usize| if axis == 0 { k * n2 + l } else { l * n2 + k };
        for k in 0..n {
            line[k] = values[idx(k)];
        }
        fwd.process(&mut line);
        for k in 0..n {
            line[k] *= ik[k] / n as f64;
        }
        inv.process(&mut line);
        for k in 0..n {
            out[idx(k)] = line[k];
        }
    }
    out
}

pub const LOCALITY_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Local,
    Nonlocal,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Local => "local",
            Verdict::Nonlocal => "nonlocal",
        })
    }
}

/// A probe pair where moving one particle changes the other's velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    /// which particle's velocity changed (1 or 2)
    pub particle: u8,
    /// the fixed coordinate of that particle
    pub fixed: f64,
    /// the two positions of the other particle
    pub other: (f64, f64),
    pub velocities: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationReport {
    pub verdict: Verdict,
    /// `max |v₁(X₁,X₂) − v₁(X₁,X₂′)|` over probes
    pub spread_v1: f64,
    /// `max |v₂(X₁,X₂) − v₂(X₁′,X₂)|` over probes
    pub spread_v2: f64,
    pub probes_used: usize,
    pub witness: Option<Witness>,
}

/// Points with substantial marginal density along an axis.
fn support(tp: &TwoParticleWave, axis: usize) -> (f64, f64) {
    let (n1, n2) = (tp.x1.len, tp.x2.len);
    let marginal: Vec<f64> = if axis == 0 {
        (0..n1).map(|a| (0..n2).map(|b| tp.rho[a * n2 + b]).sum()).collect()
    } else {
        (0..n2).map(|b| (0..n1).map(|a| tp.rho[a * n2 + b]).sum()).collect()
    };
    let max = marginal.iter().fold(0.0f64, |m, &v| m.max(v));
    let keep: Vec<usize> = (0..marginal.len()).filter(|&i| marginal[i] >= 1e-6 * max).collect();
    let ax = if axis == 0 { tp.x1 } else { tp.x2 };
    (ax.coord(keep[0]), ax.coord(*keep.last().unwrap()))
}

/// Probes random position pairs inside the support and reports whether
/// either particle's velocity depends on the other's position.
pub fn factorization_test(tp: &TwoParticleWave, probes: usize, seed: u64) -> Result<FactorizationReport> {
    if probes == 0 {
        return Err(Error::TooFewSamples { min: 1, got: 0 });
    }
    let (lo1, hi1) = support(tp, 0);
    let (lo2, hi2) = support(tp, 1);
    let mut rng = crate::rng::block_rng(seed, 0xFAC7, 0);
    let mut report = FactorizationReport {
        verdict: Verdict::Local,
        spread_v1: 0.0,
        spread_v2: 0.0,
        probes_used: 0,
        witness: None,
    };
    let mut best = 0.0f64;
    let max_attempts = probes * 50;
    let mut attempts = 0;
    while report.probes_used < probes && attempts < max_attempts {
        attempts += 1;
        let x1 = lo1 + (hi1 - lo1) * rng.random::<f64>();
        let x1b = lo1 + (hi1 - lo1) * rng.random::<f64>();
        let x2 = lo2 + (hi2 - lo2) * rng.random::<f64>();
        let x2b = lo2 + (hi2 - lo2) * rng.random::<f64>();
        let (Some((v1a, v2a)), Some((v1b, _)), Some((_, v2b))) = (
            two_particle_velocities(tp, x1, x2)?.value(),
            two_particle_velocities(tp, x1, x2b)?.value(),
            two_particle_velocities(tp, x1b, x2)?.value(),
        ) else {
            continue;
        };
        report.probes_used += 1;
        let s1 = (v1a - v1b).abs();
        let s2 = (v2a - v2b).abs();
        report.spread_v1 = report.spread_v1.max(s1);
        report.spread_v2 = report.spread_v2.max(s2);
        if s1.max(s2) > best {
            best = s1.max(s2);
            report.witness = Some(if s1 >= s2 {
                Witness {
                    particle: 1,
                    fixed: x1,
                    other: (x2, x2b),
                    velocities: (v1a, v1b),
                }
            } else {
                Witness {
                    particle: 2,
                    fixed: x2,
                    other: (x1, x1b),
                    velocities: (v2a, v2b),
                }
            });
        }
    }
    if report.probes_used == 0 {
        return Err(invalid("probes", "no probe landed above the density floor"));
    }
    if best >= LOCALITY_THRESHOLD {
        report.verdict = Verdict::Nonlocal;
    } else {
        report.witness = None;
    }
    Ok(report)
}
