//! Named initial states used by the CLI and the test suites.

use std::sync::Arc;

use num_complex::Complex64;

use super::two_particle::{AnalyticComponent, Axis, TwoParticleWave};
use super::wave::{Lattice, WaveGrid};
use crate::error::{invalid, Error, Result};

pub const WAVE_PRESETS: [&str; 3] = ["free-gaussian", "harmonic-ground", "double-slit"];
pub const TWO_PARTICLE_PRESETS: [&str; 2] = ["two-particle-product", "two-particle-entangled"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetParams {
    /// nodes per axis
    pub grid_points: usize,
    pub dim: usize,
    /// initial mean momentum along the first axis
    pub p0: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl Default for PresetParams {
    fn default() -> Self {
        Self {
            grid_points: 2048,
            dim: 1,
            p0: 0.0,
            mass: 1.0,
            hbar: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WavePreset {
    pub name: &'static str,
    pub wave: WaveGrid,
    pub potential: Vec<f64>,
    /// suggested time step and run length
    pub dt: f64,
    pub t_end: f64,
}

/// `exp(−(x − c)²/2σ² + i p x/ħ)`
pub fn gaussian_packet(x: f64, center: f64, sigma: f64, p: f64, hbar: f64) -> Complex64 {
    Complex64::from_polar((-(x - center).powi(2) / (2.0 * sigma * sigma)).exp(), p * x / hbar)
}

/// Width parameter of a free Gaussian started with width `sigma0`:
/// `σ(t) = σ₀ √(1 + (ħt/mσ₀²)²)`.
pub fn free_gaussian_width(sigma0: f64, t: f64, mass: f64, hbar: f64) -> f64 {
    sigma0 * (1.0 + (hbar * t / (mass * sigma0 * sigma0)).powi(2)).sqrt()
}

/// Suggested `(dt, t_end)` for a wave preset.
pub fn preset_timing(name: &str) -> Result<(f64, f64)> {
    match name {
        "free-gaussian" => Ok((1e-3, 1.0)),
        "harmonic-ground" => Ok((1e-3, 10.0)),
        "double-slit" => Ok((1e-3, 3.0)),
        other => Err(Error::Unknown {
            kind: "wave preset",
            name: other.to_string(),
        }),
    }
}

pub fn wave_preset(name: &str, params: &PresetParams) -> Result<WavePreset> {
    let (dt, t_end) = preset_timing(name)?;
    let PresetParams {
        grid_points: n,
        dim,
        p0,
        mass,
        hbar,
    } = *params;
    let packet = |half: f64, f: &dyn Fn(&[f64]) -> Complex64| -> Result<WaveGrid> {
        WaveGrid::from_fn(Lattice::centered(dim, n, half)?, mass, hbar, f)
    };
    match name {
        "free-gaussian" => {
            let wave = packet(20.0, &|x| {
                let mut z = gaussian_packet(x[0], 0.0, 1.0, p0, hbar);
                for &xi in &x[1..] {
                    z *= gaussian_packet(xi, 0.0, 1.0, 0.0, hbar);
                }
                z
            })?;
            let potential = vec![0.0; wave.psi.len()];
            Ok(WavePreset {
                name: "free-gaussian",
                wave,
                potential,
                dt,
                t_end,
            })
        }
        "harmonic-ground" => {
            // ground state of V = mω²x²/2 with ω = 1
            let sigma = (hbar / mass).sqrt();
            let wave = packet(10.0 * sigma, &|x| {
                x.iter()
                    .map(|&xi| gaussian_packet(xi, 0.0, sigma, 0.0, hbar))
                    .product()
            })?;
            let potential = wave
                .lattice
                .sample(|x| 0.5 * mass * x.iter().map(|v| v * v).sum::<f64>());
            Ok(WavePreset {
                name: "harmonic-ground",
                wave,
                potential,
                dt,
                t_end,
            })
        }
        "double-slit" => {
            // transverse profile just past two slits at ±3, width 0.5
            let wave = packet(40.0, &|x| {
                let mut z = gaussian_packet(x[0], -3.0, 0.5, p0, hbar)
                    + gaussian_packet(x[0], 3.0, 0.5, p0, hbar);
                for &xi in &x[1..] {
                    z *= gaussian_packet(xi, 0.0, 1.0, 0.0, hbar);
                }
                z
            })?;
            let potential = vec![0.0; wave.psi.len()];
            Ok(WavePreset {
                name: "double-slit",
                wave,
                potential,
                dt,
                t_end,
            })
        }
        other => Err(Error::Unknown {
            kind: "wave preset",
            name: other.to_string(),
        }),
    }
}

/// Gaussian `exp(−(x−c)²/2) e^{ipx}` and its derivative.
fn packet_with_derivative(x: f64, center: f64, p: f64) -> (Complex64, Complex64) {
    let g = gaussian_packet(x, center, 1.0, p, 1.0);
    (g, g * Complex64::new(-(x - center), p))
}

/// `Φ(X₁)Ξ(X₂)` with Φ carrying momentum `p1`.
pub fn product_state(axis: Axis, p1: f64, p2: f64) -> Result<TwoParticleWave> {
    let f: AnalyticComponent = Arc::new(move |a, b| {
        let (phi, dphi) = packet_with_derivative(a, 1.0, p1);
        let (xi, dxi) = packet_with_derivative(b, -1.0, p2);
        (phi * xi, dphi * xi, phi * dxi)
    });
    TwoParticleWave::from_analytic(axis, axis, &[f], 1.0, 1.0)
}

/// The two terms of the entangled preset, `A(X₁)B(X₂)` and `C(X₁)D(X₂)`,
/// with A, C displaced by ±d and carrying momenta ±p.
pub fn entangled_terms(d: f64, p: f64) -> [AnalyticComponent; 2] {
    let first: AnalyticComponent = Arc::new(move |a, b| {
        let (u, du) = packet_with_derivative(a, d, p);
        let (v, dv) = packet_with_derivative(b, -d, 0.0);
        (u * v, du * v, u * dv)
    });
    let second: AnalyticComponent = Arc::new(move |a, b| {
        let (u, du) = packet_with_derivative(a, -d, -p);
        let (v, dv) = packet_with_derivative(b, d, 0.0);
        (u * v, du * v, u * dv)
    });
    [first, second]
}

/// Single-component superposition `AB + CD`.
pub fn entangled_state(axis: Axis, d: f64, p: f64) -> Result<TwoParticleWave> {
    let [t1, t2] = entangled_terms(d, p);
    let f: AnalyticComponent = Arc::new(move |a, b| {
        let (v1, a1, b1) = t1(a, b);
        let (v2, a2, b2) = t2(a, b);
        (v1 + v2, a1 + a2, b1 + b2)
    });
    TwoParticleWave::from_analytic(axis, axis, &[f], 1.0, 1.0)
}

pub fn two_particle_preset(name: &str, grid_points: usize) -> Result<TwoParticleWave> {
    if grid_points < 16 {
        return Err(invalid("grid_points", "two-particle grids need at least 16 nodes"));
    }
    let axis = Axis::centered(grid_points, 10.0);
    match name {
        "two-particle-product" => product_state(axis, 1.0, -0.5),
        "two-particle-entangled" => entangled_state(axis, 1.5, 1.0),
        other => Err(Error::Unknown {
            kind: "two-particle preset",
            name: other.to_string(),
        }),
    }
}
