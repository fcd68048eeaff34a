//! Residuals of the quantum Hamilton-Jacobi and continuity equations from
//! two consecutive polar decompositions.
//!
//! Time derivatives are forward differences over `dt`; spatial terms are
//! averaged over both snapshots, so the residual is centered at `t + dt/2`.

use super::polar::{gradient, quantum_potential, wrap_phase, PolarFields, ScalarField};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub field: ScalarField,
    /// RMS over unmasked nodes weighted by the density `P = R²`.
    pub rms: f64,
    /// Plain RMS over unmasked nodes.
    pub rms_unweighted: f64,
    pub max_abs: f64,
}

fn check_pair(a: &PolarFields, b: &PolarFields) -> Result<f64> {
    if a.lattice != b.lattice {
        return Err(invalid("fields", "snapshots live on different lattices"));
    }
    let dt = b.time - a.time;
    if !(dt > 0.0) {
        return Err(invalid("dt", format!("snapshots must advance in time, got {dt}")));
    }
    Ok(dt)
}

fn report(
    a: &PolarFields,
    b: &PolarFields,
    values: Vec<f64>,
) -> ResidualReport {
    let mask: Vec<bool> = a.mask.iter().zip(&b.mask).map(|(x, y)| *x || *y).collect();
    let (mut w_sum, mut w_sq, mut n, mut sq, mut max_abs) = (0.0, 0.0, 0usize, 0.0, 0.0f64);
    let mut field = values;
    for i in 0..field.len() {
        if mask[i] {
            field[i] = 0.0;
            continue;
        }
        let p = 0.5 * (a.r[i] * a.r[i] + b.r[i] * b.r[i]);
        let v = field[i];
        w_sum += p;
        w_sq += p * v * v;
        sq += v * v;
        n += 1;
        max_abs = max_abs.max(v.abs());
    }
    ResidualReport {
        field: ScalarField {
            lattice: a.lattice.clone(),
            values: field,
            mask,
        },
        rms: (w_sq / w_sum).sqrt(),
        rms_unweighted: (sq / n as f64).sqrt(),
        max_abs,
    }
}

/// `∂S/∂t + (∇S)²/2m + V + Q`.
pub fn hj_residual(a: &PolarFields, b: &PolarFields, potential: &[f64]) -> Result<ResidualReport> {
    let dt = check_pair(a, b)?;
    if potential.len() != a.r.len() {
        return Err(Error::DimensionMismatch {
            expected: a.r.len(),
            found: potential.len(),
        });
    }
    let (qa, qb) = (quantum_potential(a), quantum_potential(b));
    let (ga, gb) = (a.grad_s_squared(), b.grad_s_squared());
    let two_m = 2.0 * a.mass;
    let values = (0..a.r.len())
        .map(|i| {
            let ds_dt = a.hbar * wrap_phase((b.s[i] - a.s[i]) / a.hbar) / dt;
            let spatial = 0.5 * (ga[i] / two_m + qa.values[i] + gb[i] / two_m + qb.values[i]);
            ds_dt + spatial + potential[i]
        })
        .collect();
    Ok(report(a, b, values))
}

fn flux_divergence(f: &PolarFields) -> Vec<f64> {
    let p = f.density();
    let mut div = vec![0.0; p.len()];
    for axis in 0..f.lattice.dim() {
        let flux: Vec<f64> = p
            .iter()
            .zip(f.grad_s(axis))
            .map(|(p, g)| p * g / f.mass)
            .collect();
        for (d, g) in div.iter_mut().zip(gradient(&f.lattice, &flux, axis)) {
            *d += g;
        }
    }
    div
}

/// `∂P/∂t + ∇·(P ∇S/m)`.
pub fn continuity_residual(a: &PolarFields, b: &PolarFields) -> Result<ResidualReport> {
    let dt = check_pair(a, b)?;
    let (da, db) = (flux_divergence(a), flux_divergence(b));
    let values = (0..a.r.len())
        .map(|i| (b.r[i] * b.r[i] - a.r[i] * a.r[i]) / dt + 0.5 * (da[i] + db[i]))
        .collect();
    Ok(report(a, b, values))
}
