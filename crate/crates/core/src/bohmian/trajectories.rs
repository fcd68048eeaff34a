//! Guidance trajectories `ẋ = ∇S/m` integrated alongside the wave.
//!
//! Each trajectory step of size `dt` advances the wave by two half-steps, so
//! the RK4 stages see the velocity field at `t`, `t + dt/2` and `t + dt`.
//! Velocities between nodes are linearly (bilinearly in 2D) interpolated.

use rand::Rng;
use rayon::prelude::*;

use super::polar::{gradient, polar_decompose, quantum_potential};
use super::wave::{Lattice, Propagator, WaveGrid};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialLaw {
    /// drawn from |Ψ₀|² with the given seed
    Born { seed: u64 },
    Explicit,
}

/// Particle positions at saved times. Coordinates of a particle that left
/// the grid are NaN from the first save after its exit.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    pub dim: usize,
    pub particles: usize,
    pub times: Vec<f64>,
    /// per saved time, `particles × dim` coordinates
    pub positions: Vec<Vec<f64>>,
    /// per saved time, `−∇(V + Q)` at each particle, same layout
    pub forces: Vec<Vec<f64>>,
    /// time at which each particle left the grid
    pub exited: Vec<Option<f64>>,
    pub law: InitialLaw,
    pub mass: f64,
}

impl TrajectorySet {
    pub fn position(&self, save: usize, particle: usize) -> &[f64] {
        &self.positions[save][particle * self.dim..(particle + 1) * self.dim]
    }

    /// Final coordinate along the first axis of every particle still on the grid.
    pub fn final_positions(&self) -> Vec<f64> {
        let last = self.positions.len() - 1;
        (0..self.particles)
            .filter(|&p| self.exited[p].is_none())
            .map(|p| self.position(last, p)[0])
            .collect()
    }

    /// 1D only: the ordering of surviving particles never changes.
    pub fn order_preserved(&self) -> bool {
        if self.dim != 1 {
            return false;
        }
        let alive: Vec<usize> = (0..self.particles).filter(|&p| self.exited[p].is_none()).collect();
        let mut order = alive.clone();
        order.sort_by(|&a, &b| self.positions[0][a].total_cmp(&self.positions[0][b]));
        self.positions
            .iter()
            .all(|row| order.windows(2).all(|w| row[w[0]] < row[w[1]]))
    }

    /// RMS of `m ẍ + ∇(V + Q)` over interior saves and surviving particles,
    /// with `ẍ` from second differences of the saved positions.
    pub fn newton_residual(&self) -> Result<f64> {
        if self.times.len() < 3 {
            return Err(invalid("trajectories", "need at least three saved times"));
        }
        let tau = self.times[1] - self.times[0];
        let (mut sq, mut n) = (0.0, 0usize);
        for k in 1..self.times.len() - 1 {
            for p in (0..self.particles).filter(|&p| self.exited[p].is_none()) {
                for a in 0..self.dim {
                    let at = |s: usize| self.positions[s][p * self.dim + a];
                    let acc = (at(k + 1) - 2.0 * at(k) + at(k - 1)) / (tau * tau);
                    let r = self.mass * acc - self.forces[k][p * self.dim + a];
                    sq += r * r;
                    n += 1;
                }
            }
        }
        Ok((sq / n as f64).sqrt())
    }
}

/// Velocity `∇S/m` per axis at every node, from wrapped phase differences.
pub fn velocity_field(w: &WaveGrid) -> Vec<Vec<f64>> {
    let lat = &w.lattice;
    let h = lat.spacing();
    (0..lat.dim())
        .map(|axis| {
            (0..w.psi.len())
                .map(|i| {
                    let up = w.psi[lat.shift(i, axis, 1)];
                    let dn = w.psi[lat.shift(i, axis, -1)];
                    w.hbar * (up * dn.conj()).arg() / (2.0 * h * w.mass)
                })
                .collect()
        })
        .collect()
}

/// `−∇(V + Q)` per axis at every node.
pub fn force_field(w: &WaveGrid, potential: &[f64]) -> Vec<Vec<f64>> {
    let q = quantum_potential(&polar_decompose(w));
    let total: Vec<f64> = q.values.iter().zip(potential).map(|(q, v)| q + v).collect();
    (0..w.lattice.dim())
        .map(|axis| gradient(&w.lattice, &total, axis).into_iter().map(|g| -g).collect())
        .collect()
}

/// Multilinear interpolation of node fields; `None` outside the grid.
pub fn interpolate(lat: &Lattice, fields: &[Vec<f64>], x: &[f64]) -> Option<Vec<f64>> {
    let h = lat.spacing();
    let mut base = [0usize; 2];
    let mut frac = [0.0f64; 2];
    for a in 0..lat.dim() {
        if !(x[a] >= lat.origin()[a] && x[a] <= lat.upper(a)) {
            return None;
        }
        let u = (x[a] - lat.origin()[a]) / h;
        let i = (u.floor() as usize).min(lat.shape()[a] - 2);
        base[a] = i;
        frac[a] = u - i as f64;
    }
    let out = fields
        .iter()
        .map(|f| match lat.dim() {
            1 => f[base[0]] * (1.0 - frac[0]) + f[base[0] + 1] * frac[0],
            _ => {
                let n1 = lat.shape()[1];
                let at = |i: usize, j: usize| f[i * n1 + j];
                let (i, j) = (base[0], base[1]);
                let (fx, fy) = (frac[0], frac[1]);
                at(i, j) * (1.0 - fx) * (1.0 - fy)
                    + at(i + 1, j) * fx * (1.0 - fy)
                    + at(i, j + 1) * (1.0 - fx) * fy
                    + at(i + 1, j + 1) * fx * fy
            }
        })
        .collect();
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOptions {
    pub dt: f64,
    pub steps: usize,
    /// save every this many trajectory steps (the initial state is saved too)
    pub save_every: usize,
}

/// Integrates guidance trajectories from `initial` (one coordinate vector
/// per particle) while evolving the wave. Returns the paths and the final wave.
pub fn integrate_trajectories(
    w0: &WaveGrid,
    potential: &[f64],
    initial: &[Vec<f64>],
    opts: TrajectoryOptions,
    law: InitialLaw,
) -> Result<(TrajectorySet, WaveGrid)> {
    let lat = w0.lattice.clone();
    let dim = lat.dim();
    if opts.save_every == 0 {
        return Err(invalid("save_every", "must be at least 1"));
    }
    for x in initial {
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: x.len(),
            });
        }
        if interpolate(&lat, &[], x).is_none() {
            return Err(Error::OutsideGrid(x.clone()));
        }
    }
    let half = Propagator::new(w0, potential, 0.5 * opts.dt)?;
    let mut w = w0.clone();
    let particles = initial.len();
    let mut pos: Vec<f64> = initial.iter().flatten().copied().collect();
    let mut exited: Vec<Option<f64>> = vec![None; particles];

    let mut set = TrajectorySet {
        dim,
        particles,
        times: Vec::new(),
        positions: Vec::new(),
        forces: Vec::new(),
        exited: Vec::new(),
        law,
        mass: w0.mass,
    };
    let save = |set: &mut TrajectorySet, w: &WaveGrid, pos: &[f64], exited: &[Option<f64>]| {
        let force = force_field(w, potential);
        let mut row = Vec::with_capacity(pos.len());
        let mut frow = Vec::with_capacity(pos.len());
        for p in 0..particles {
            let x = &pos[p * dim..(p + 1) * dim];
            match (exited[p], interpolate(&lat, &force, x)) {
                (None, Some(f)) => {
                    row.extend_from_slice(x);
                    frow.extend(f);
                }
                _ => {
                    row.extend(std::iter::repeat_n(f64::NAN, dim));
                    frow.extend(std::iter::repeat_n(f64::NAN, dim));
                }
            }
        }
        set.times.push(w.time);
        set.positions.push(row);
        set.forces.push(frow);
    };
    save(&mut set, &w, &pos, &exited);

    let h = opts.dt;
    for step in 1..=opts.steps {
        let v0 = velocity_field(&w);
        half.step(&mut w);
        let vh = velocity_field(&w);
        half.step(&mut w);
        let v1 = velocity_field(&w);
        let t_end = w.time;
        pos.par_chunks_mut(dim)
            .zip(exited.par_iter_mut())
            .for_each(|(x, gone)| {
                if gone.is_some() {
                    return;
                }
                match rk4(&lat, [&v0, &vh, &v1], x, h) {
                    Some(next) => x.copy_from_slice(&next),
                    None => *gone = Some(t_end),
                }
            });
        if step % opts.save_every == 0 || step == opts.steps {
            save(&mut set, &w, &pos, &exited);
        }
    }
    set.exited = exited;
    Ok((set, w))
}

fn rk4(lat: &Lattice, v: [&Vec<Vec<f64>>; 3], x: &[f64], h: f64) -> Option<Vec<f64>> {
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| a + s * b).collect() };
    let k1 = interpolate(lat, v[0], x)?;
    let k2 = interpolate(lat, v[1], &axpy(x, 0.5 * h, &k1))?;
    let k3 = interpolate(lat, v[1], &axpy(x, 0.5 * h, &k2))?;
    let k4 = interpolate(lat, v[2], &axpy(x, h, &k3))?;
    let next: Vec<f64> = (0..x.len())
        .map(|a| x[a] + h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]))
        .collect();
    interpolate(lat, &[], &next).map(|_| next)
}

/// Piecewise-linear CDF of |Ψ|² through the nodes of a 1D grid.
struct GridCdf {
    x: Vec<f64>,
    cdf: Vec<f64>,
}

impl GridCdf {
    fn new(w: &WaveGrid) -> Result<Self> {
        if w.lattice.dim() != 1 {
            return Err(invalid("dimension", "Born sampling and KS distance are 1D only"));
        }
        let p = w.density();
        let h = w.lattice.spacing();
        let x: Vec<f64> = (0..p.len()).map(|i| w.lattice.coord(i, 0)).collect();
        let mut cdf = vec![0.0; p.len()];
        for i in 1..p.len() {
            cdf[i] = cdf[i - 1] + 0.5 * h * (p[i - 1] + p[i]);
        }
        let total = *cdf.last().unwrap();
        cdf.iter_mut().for_each(|c| *c /= total);
        Ok(Self { x, cdf })
    }

    fn eval(&self, x: f64) -> f64 {
        if x <= self.x[0] {
            return 0.0;
        }
        let last = self.x.len() - 1;
        if x >= self.x[last] {
            return 1.0;
        }
        let h = self.x[1] - self.x[0];
        let i = (((x - self.x[0]) / h).floor() as usize).min(last - 1);
        let f = (x - self.x[i]) / h;
        self.cdf[i] * (1.0 - f) + self.cdf[i + 1] * f
    }

    fn invert(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let f = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.x[i - 1] + f * (self.x[i] - self.x[i - 1])
    }
}

/// `n` positions drawn from |Ψ|² on a 1D grid, sorted ascending.
pub fn sample_born_positions(w: &WaveGrid, n: usize, seed: u64) -> Result<Vec<f64>> {
    let cdf = GridCdf::new(w)?;
    let mut out: Vec<f64> = crate::rng::map_blocks(seed, 0xB04, n, |range, rng| {
        range.map(|_| cdf.invert(rng.random::<f64>())).collect::<Vec<_>>()
    })
    .concat();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// One-sample Kolmogorov-Smirnov distance between `samples` and |Ψ|².
pub fn ks_distance(samples: &[f64], w: &WaveGrid) -> Result<f64> {
    let cdf = GridCdf::new(w)?;
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    Ok(s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf.eval(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max))
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}
