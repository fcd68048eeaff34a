//! Small dense complex linear algebra for spin-1/2 observables.
//!
//! Everything here lives at dimension ≤ 4 in practice: single spinors, the
//! two-spin product basis `|++⟩, |+−⟩, |−+⟩, |−−⟩`, and the finite density
//! matrices used by the dispersion checks. Matrices are stored row-major in
//! a flat `Vec<Complex64>`.
//!
//! Phase convention: `|+⟩ = (1, 0)` and `|−⟩ = (0, 1)` are the σz eigenvectors,
//! and eigenvectors returned by [`eigen`] have their first non-negligible
//! component real and positive.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const IMAG_TOL: f64 = 1e-10;
/// Accepted deviation of |n|² from 1 before a direction is rejected.
const UNIT_ACCEPT_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Unit vector in 3-space: the orientation of a spin meter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    x: f64,
    y: f64,
    z: f64,
}

impl Direction {
    /// Builds a direction from Cartesian components that must already be
    /// unit length (within 1e-9); the stored vector is renormalized exactly.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm_sq = x * x + y * y + z * z;
        if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > UNIT_ACCEPT_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        let n = norm_sq.sqrt();
        Ok(Self {
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    /// Normalizes an arbitrary non-zero vector.
    pub fn normalize(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NotNormalized { norm_sq: n * n });
        }
        Ok(Self {
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    /// Polar angle θ from +z, azimuth φ from +x.
    pub fn from_polar(theta: f64, phi: f64) -> Self {
        Self {
            x: theta.sin() * phi.cos(),
            y: theta.sin() * phi.sin(),
            z: theta.cos(),
        }
    }

    /// Direction at polar angle θ in the xz-plane.
    pub fn in_xz_plane(theta: f64) -> Self {
        Self::from_polar(theta, 0.0)
    }

    pub fn x_axis() -> Self {
        Self { x: 1.0, y: 0.0, z: 0.0 }
    }

    pub fn y_axis() -> Self {
        Self { x: 0.0, y: 1.0, z: 0.0 }
    }

    pub fn z_axis() -> Self {
        Self { x: 0.0, y: 0.0, z: 1.0 }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn components(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Angle between two directions in [0, π].
    pub fn angle_to(&self, other: &Direction) -> f64 {
        // atan2 of |a×b| and a·b keeps precision near 0 and π
        let cx = self.y * other.z - self.z * other.y;
        let cy = self.z * other.x - self.x * other.z;
        let cz = self.x * other.y - self.y * other.x;
        (cx * cx + cy * cy + cz * cz).sqrt().atan2(self.dot(other))
    }

    /// Applies a 3×3 rotation matrix (row-major) and renormalizes.
    pub fn rotated(&self, rot: &[[f64; 3]; 3]) -> Direction {
        let v = self.components();
        let mut out = [0.0; 3];
        for (o, row) in out.iter_mut().zip(rot.iter()) {
            *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
        }
        Direction::normalize(out[0], out[1], out[2]).expect("rotation preserves length")
    }
}

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<Complex64>,
}

/// A 2×2 observable on a single spin.
pub type Operator2 = Operator;
/// A 4×4 observable on the two-spin product space.
pub type Operator4 = Operator;

impl Operator {
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| Complex64::new(v, 0.0)).collect())
                .collect(),
        )
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.data[i * values.len() + i] = Complex64::new(v, 0.0);
        }
        m
    }

    /// `|φ⟩⟨φ|`
    pub fn projector(phi: &StateVector) -> Self {
        Self::outer(phi.amplitudes(), phi.amplitudes())
    }

    /// `|u⟩⟨v|`
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        let dim = u.len();
        assert_eq!(dim, v.len(), "outer product of mismatched vectors");
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = u[i] * v[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    /// Largest entrywise |M − M†|.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_deviation() <= HERMITIAN_TOL
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let deviation = self.hermiticity_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(())
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        check_dim(self.dim, v.len())?;
        let n = self.dim;
        Ok((0..n)
            .map(|i| (0..n).map(|j| self.data[i * n + j] * v[j]).sum())
            .collect())
    }

    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        check_dim(self.dim, other.dim)?;
        let n = self.dim;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    m.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Ok(m)
    }

    /// Largest entrywise |A − B|.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn combine(&self, other: &Operator, f: impl Fn(Complex64, Complex64) -> Complex64) -> Operator {
        assert_eq!(self.dim, other.dim, "operator dimension mismatch");
        Operator {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.combine(rhs, |a, b| a + b)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.combine(rhs, |a, b| a - b)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs).expect("operator dimension mismatch")
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self.get(i, j);
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Normalized complex state vector (a spinor or a two-spin state).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

/// A state over the ordered product basis `|++⟩, |+−⟩, |−+⟩, |−−⟩`.
pub type TwoSpinState = StateVector;

impl StateVector {
    /// Accepts amplitudes whose squared norm is 1 within 1e-12.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let norm_sq = norm_sq(&amps);
        if amps.is_empty() || (norm_sq - 1.0).abs() > HERMITIAN_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self { amps })
    }

    pub fn normalized(amps: Vec<Complex64>) -> Result<Self> {
        let n = norm_sq(&amps).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NotNormalized { norm_sq: n * n });
        }
        Ok(Self {
            amps: amps.into_iter().map(|a| a / n).collect(),
        })
    }

    /// Basis vector `e_index` of dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self { amps }
    }

    /// `|+⟩`, the σz = +1 spinor.
    pub fn up() -> Self {
        Self::basis(2, 0)
    }

    /// `|−⟩`, the σz = −1 spinor.
    pub fn down() -> Self {
        Self::basis(2, 1)
    }

    pub fn product(a: &StateVector, b: &StateVector) -> Self {
        let amps = a
            .amps
            .iter()
            .flat_map(|&x| b.amps.iter().map(move |&y| x * y))
            .collect();
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.amps)
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        check_dim(self.dim(), other.dim())?;
        Ok(inner(&self.amps, &other.amps))
    }
}

fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// `⟨u|v⟩`
fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Hermitian positive semidefinite matrix; the trace is recorded, not forced.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
    trace: f64,
}

impl DensityMatrix {
    pub fn new(op: Operator) -> Result<Self> {
        op.ensure_hermitian()?;
        let min_eig = eigen(&op)?
            .last()
            .map(|(v, _)| *v)
            .unwrap_or(0.0);
        if min_eig < -1e-10 {
            return Err(crate::error::invalid(
                "density matrix",
                format!("negative eigenvalue {min_eig:e}"),
            ));
        }
        let trace = op.trace().re;
        Ok(Self { op, trace })
    }

    pub fn pure(state: &StateVector) -> Self {
        let op = Operator::projector(state);
        let trace = op.trace().re;
        Self { op, trace }
    }

    /// The identity `1_d`, whose trace is `d`.
    pub fn identity(dim: usize) -> Self {
        Self {
            op: Operator::identity(dim),
            trace: dim as f64,
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            op: Operator::identity(dim).scale(1.0 / dim as f64),
            trace: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }
}

/// A source of mean values: either a state vector (`⟨ψ|R|ψ⟩/⟨ψ|ψ⟩`) or a
/// density matrix (`Tr(ρR)`).
pub trait MeanValue {
    fn mean(&self, r: &Operator) -> Result<f64>;
}

impl MeanValue for StateVector {
    fn mean(&self, r: &Operator) -> Result<f64> {
        expectation(self, r)
    }
}

impl MeanValue for DensityMatrix {
    fn mean(&self, r: &Operator) -> Result<f64> {
        trace_expectation(self, r)
    }
}

pub fn pauli_x() -> Operator2 {
    Operator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
}

pub fn pauli_y() -> Operator2 {
    Operator::from_rows(vec![vec![ZERO, -I], vec![I, ZERO]]).unwrap()
}

pub fn pauli_z() -> Operator2 {
    Operator::diagonal(&[1.0, -1.0])
}

/// `n·σ = nx σx + ny σy + nz σz`
pub fn spin_along(n: &Direction) -> Operator2 {
    let (x, y, z) = (n.x(), n.y(), n.z());
    Operator::from_rows(vec![
        vec![Complex64::new(z, 0.0), Complex64::new(x, -y)],
        vec![Complex64::new(x, y), Complex64::new(-z, 0.0)],
    ])
    .unwrap()
}

/// Kronecker product `A ⊗ B` in the fixed basis order (first factor slowest).
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    let (na, nb) = (a.dim(), b.dim());
    let n = na * nb;
    let mut m = Operator::zeros(n);
    for i in 0..na {
        for j in 0..na {
            let aij = a.get(i, j);
            for k in 0..nb {
                for l in 0..nb {
                    m.set(i * nb + k, j * nb + l, aij * b.get(k, l));
                }
            }
        }
    }
    m
}

/// The two-spin singlet `(|+−⟩ − |−+⟩)/√2`.
pub fn singlet() -> TwoSpinState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    StateVector {
        amps: vec![ZERO, Complex64::new(h, 0.0), Complex64::new(-h, 0.0), ZERO],
    }
}

/// `⟨ψ|M|ψ⟩ / ⟨ψ|ψ⟩` for Hermitian `M`.
pub fn expectation(psi: &StateVector, m: &Operator) -> Result<f64> {
    check_dim(m.dim(), psi.dim())?;
    m.ensure_hermitian()?;
    let mv = m.apply(psi.amplitudes())?;
    let value = inner(psi.amplitudes(), &mv) / psi.norm_sq();
    debug_assert!(
        value.im.abs() < IMAG_TOL,
        "imaginary residue {} in expectation",
        value.im
    );
    Ok(value.re)
}

/// `Tr(ρR)`
pub fn trace_expectation(rho: &DensityMatrix, r: &Operator) -> Result<f64> {
    check_dim(rho.dim(), r.dim())?;
    let value = rho.operator().matmul(r)?.trace();
    debug_assert!(
        value.im.abs() < IMAG_TOL || !r.is_hermitian(),
        "imaginary residue {} in trace expectation",
        value.im
    );
    Ok(value.re)
}

/// `⟨R²⟩ − ⟨R⟩²` under the mean-value rule of the state or density.
pub fn dispersion<E: MeanValue + ?Sized>(ensemble: &E, r: &Operator) -> Result<f64> {
    let r2 = r.matmul(r)?;
    let mean = ensemble.mean(r)?;
    Ok(ensemble.mean(&r2)? - mean * mean)
}

/// Eigen-decomposition of a Hermitian matrix: real eigenvalues sorted
/// descending with orthonormal eigenvectors.
pub fn eigen(m: &Operator) -> Result<Vec<(f64, Vec<Complex64>)>> {
    m.ensure_hermitian()?;
    let mut pairs = match m.dim() {
        1 => vec![(m.get(0, 0).re, vec![ONE])],
        2 => eigen2(m),
        _ => jacobi_eigen(m),
    };
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (_, v) in pairs.iter_mut() {
        fix_phase(v);
    }
    Ok(pairs)
}

/// Rotates the global phase so the first non-negligible component is real
/// and positive.
fn fix_phase(v: &mut [Complex64]) {
    if let Some(lead) = v.iter().copied().find(|c| c.norm() > 1e-12) {
        let phase = lead.conj() / lead.norm();
        for c in v.iter_mut() {
            *c *= phase;
        }
    }
}

fn eigen2(m: &Operator) -> Vec<(f64, Vec<Complex64>)> {
    let a = m.get(0, 0).re;
    let d = m.get(1, 1).re;
    let b = m.get(0, 1);
    if b.norm() <= 1e-300 {
        return vec![(a, vec![ONE, ZERO]), (d, vec![ZERO, ONE])];
    }
    let mean = 0.5 * (a + d);
    let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mean + half_gap, mean - half_gap]
        .into_iter()
        .map(|lambda| {
            // two equivalent null vectors of M − λ; keep the better conditioned one
            let u = [b, Complex64::new(lambda - a, 0.0)];
            let w = [Complex64::new(lambda - d, 0.0), b.conj()];
            let pick = if norm_sq(&u) >= norm_sq(&w) { u } else { w };
            let n = norm_sq(&pick).sqrt();
            (lambda, vec![pick[0] / n, pick[1] / n])
        })
        .collect()
}

/// Cyclic Jacobi for complex Hermitian matrices. Each rotation first removes
/// the phase of the pivot then applies a real Givens rotation.
fn jacobi_eigen(m: &Operator) -> Vec<(f64, Vec<Complex64>)> {
    let n = m.dim();
    let mut a = m.clone();
    let mut v = Operator::identity(n);
    let scale = a.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a.get(i, j).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = a.get(p, q);
                let bn = b.norm();
                if bn <= 1e-300 {
                    continue;
                }
                let phase = b / bn;
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let theta = (aqq - app) / (2.0 * bn);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let mut u = Operator::identity(n);
                u.set(p, p, Complex64::new(c, 0.0));
                u.set(p, q, Complex64::new(s, 0.0));
                u.set(q, p, -phase.conj() * s);
                u.set(q, q, phase.conj() * c);
                a = &(&u.adjoint() * &a) * &u;
                // exact zero and exactly real diagonal after the rotation
                a.set(p, q, ZERO);
                a.set(q, p, ZERO);
                a.set(p, p, Complex64::new(a.get(p, p).re, 0.0));
                a.set(q, q, Complex64::new(a.get(q, q).re, 0.0));
                v = &v * &u;
            }
        }
    }
    (0..n)
        .map(|k| (a.get(k, k).re, (0..n).map(|i| v.get(i, k)).collect()))
        .collect()
}
