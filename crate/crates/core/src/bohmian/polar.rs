use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::wave::{Lattice, WaveGrid};

/// Nodes with `R < R_FLOOR · max R` are masked.
pub const R_FLOOR: f64 = 1e-6;

/// `Ψ = R exp(iS/ħ)` on the lattice. `mask[i]` is true where R is below the
/// floor; S there is the raw principal phase and carries no meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarFields {
    pub lattice: Lattice,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    pub mask: Vec<bool>,
    pub mass: f64,
    pub hbar: f64,
    pub time: f64,
}

/// Node values with the mask they were derived under; masked values are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub lattice: Lattice,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl ScalarField {
    /// Values on unmasked nodes.
    pub fn unmasked(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| !m)
            .map(|(&v, _)| v)
    }
}

/// Wraps a phase difference into (−π, π].
pub fn wrap_phase(d: f64) -> f64 {
    let w = (d + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

pub fn polar_decompose(w: &WaveGrid) -> PolarFields {
    let lat = &w.lattice;
    let r: Vec<f64> = w.psi.iter().map(|z| z.norm()).collect();
    let rmax = r.iter().fold(0.0f64, |m, &v| m.max(v));
    let mask: Vec<bool> = r.iter().map(|&v| v < R_FLOOR * rmax).collect();
    let raw: Vec<f64> = w.psi.iter().map(|z| z.arg()).collect();
    let phase = unwrap_phase(lat, &raw, &r, &mask);
    PolarFields {
        lattice: lat.clone(),
        s: phase.into_iter().map(|p| w.hbar * p).collect(),
        r,
        mask,
        mass: w.mass,
        hbar: w.hbar,
        time: w.time,
    }
}

/// Breadth-first unwrapping over unmasked nodes, seeded at the largest
/// amplitude of each connected region. Periodic neighbors are not followed
/// across the seam so the result stays single-valued along each line.
fn unwrap_phase(lat: &Lattice, raw: &[f64], r: &[f64], mask: &[bool]) -> Vec<f64> {
    let n = raw.len();
    let mut out = raw.to_vec();
    let mut seen = mask.to_vec();
    let mut order: Vec<usize> = (0..n).filter(|&i| !mask[i]).collect();
    order.sort_by(|&a, &b| r[b].total_cmp(&r[a]).then(a.cmp(&b)));
    let mut queue = VecDeque::new();
    for seed in order {
        if seen[seed] {
            continue;
        }
        seen[seed] = true;
        queue.push_back(seed);
        while let Some(i) = queue.pop_front() {
            let m = lat.unravel(i);
            for axis in 0..lat.dim() {
                for delta in [-1isize, 1] {
                    let pos = m[axis] as isize + delta;
                    if pos < 0 || pos >= lat.shape()[axis] as isize {
                        continue;
                    }
                    let j = lat.shift(i, axis, delta);
                    if seen[j] {
                        continue;
                    }
                    seen[j] = true;
                    out[j] = out[i] + wrap_phase(raw[j] - out[i]);
                    queue.push_back(j);
                }
            }
        }
    }
    out
}

impl PolarFields {
    /// Reconstructs `R exp(iS/ħ)` at every node.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        self.r
            .iter()
            .zip(&self.s)
            .map(|(&r, &s)| Complex64::from_polar(r, s / self.hbar))
            .collect()
    }

    /// Copy with every amplitude multiplied by `c`.
    pub fn scaled_amplitude(&self, c: f64) -> Self {
        let mut f = self.clone();
        f.r.iter_mut().for_each(|r| *r *= c);
        f
    }

    pub fn density(&self) -> Vec<f64> {
        self.r.iter().map(|r| r * r).collect()
    }

    /// `∂S/∂x_axis` by central differences of the wrapped phase.
    pub fn grad_s(&self, axis: usize) -> Vec<f64> {
        let lat = &self.lattice;
        let h = lat.spacing();
        (0..self.s.len())
            .map(|i| {
                let up = self.s[lat.shift(i, axis, 1)];
                let dn = self.s[lat.shift(i, axis, -1)];
                self.hbar * wrap_phase((up - dn) / self.hbar) / (2.0 * h)
            })
            .collect()
    }

    /// `Σ_axis (∂S/∂x_axis)²`
    pub fn grad_s_squared(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.s.len()];
        for axis in 0..self.lattice.dim() {
            for (a, g) in acc.iter_mut().zip(self.grad_s(axis)) {
                *a += g * g;
            }
        }
        acc
    }
}

/// Central second-difference Laplacian of a node field.
pub fn laplacian(lat: &Lattice, f: &[f64]) -> Vec<f64> {
    let h2 = lat.spacing() * lat.spacing();
    (0..f.len())
        .map(|i| {
            (0..lat.dim())
                .map(|a| f[lat.shift(i, a, 1)] - 2.0 * f[i] + f[lat.shift(i, a, -1)])
                .sum::<f64>()
                / h2
        })
        .collect()
}

/// Central first difference of a node field along `axis`.
pub fn gradient(lat: &Lattice, f: &[f64], axis: usize) -> Vec<f64> {
    let h = lat.spacing();
    (0..f.len())
        .map(|i| (f[lat.shift(i, axis, 1)] - f[lat.shift(i, axis, -1)]) / (2.0 * h))
        .collect()
}

/// `Q = −(ħ²/2mR) ∇²R`, zero and masked below the amplitude floor.
pub fn quantum_potential(f: &PolarFields) -> ScalarField {
    let lap = laplacian(&f.lattice, &f.r);
    let coef = f.hbar * f.hbar / (2.0 * f.mass);
    let values = (0..f.r.len())
        .map(|i| if f.mask[i] { 0.0 } else { -coef * lap[i] / f.r[i] })
        .collect();
    ScalarField {
        lattice: f.lattice.clone(),
        values,
        mask: f.mask.clone(),
    }
}
