//! Local hidden-variable models `P(a,b) = ∫ρ(λ) A(a,λ) B(b,λ) dλ` and their
//! Monte Carlo estimation.
//!
//! A model owns its λ sampler, so `∫ρ = 1` holds by construction; the
//! bounds `|A| ≤ 1`, `|B| ≤ 1` are checked on every draw.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::correlations::{chsh_with, mixture_correlation, MeterSettings};
use crate::error::{Error, Result};
use crate::rng::{map_blocks, Moments};
use crate::spin_algebra::Direction;

/// Opaque hidden variable: up to four reals whose meaning is private to the
/// model that drew it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lambda(pub [f64; 4]);

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "({a}, {b}, {c}, {d})")
    }
}

pub trait LhvModel: Send + Sync {
    fn name(&self) -> &str;

    fn sample(&self, rng: &mut ChaCha8Rng) -> Lambda;

    /// Response of the first meter; may depend only on its own setting.
    fn response_a(&self, a: &Direction, lambda: &Lambda) -> f64;

    /// Response of the second meter.
    fn response_b(&self, b: &Direction, lambda: &Lambda) -> f64;

    /// Exact correlation when known, for oracle checks.
    fn closed_form(&self, _a: &Direction, _b: &Direction) -> Option<f64> {
        None
    }
}

fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// λ uniform on the unit sphere, `A = sign(a·λ)`, `B = −sign(b·λ)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SignModel;

impl LhvModel for SignModel {
    fn name(&self) -> &str {
        "sign"
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Lambda {
        let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
        let phi: f64 = 2.0 * PI * rng.random::<f64>();
        let r = (1.0 - z * z).max(0.0).sqrt();
        Lambda([r * phi.cos(), r * phi.sin(), z, 0.0])
    }

    fn response_a(&self, a: &Direction, l: &Lambda) -> f64 {
        sign(a.x() * l.0[0] + a.y() * l.0[1] + a.z() * l.0[2])
    }

    fn response_b(&self, b: &Direction, l: &Lambda) -> f64 {
        -sign(b.x() * l.0[0] + b.y() * l.0[1] + b.z() * l.0[2])
    }

    fn closed_form(&self, a: &Direction, b: &Direction) -> Option<f64> {
        Some(-1.0 + 2.0 * a.angle_to(b) / PI)
    }
}

/// The product-state mixture as an explicitly local model.
///
/// λ = (s, u₁, u₂): `s = +1` picks `|+⟩|−⟩`, `s = −1` picks `|−⟩|+⟩`, each
/// with probability ½. Each meter answers +1 when its own uniform falls
/// below the Born probability of its particle's state.
#[derive(Debug, Clone, Copy, Default)]
pub struct MixtureModel;

impl LhvModel for MixtureModel {
    fn name(&self) -> &str {
        "mixture"
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Lambda {
        let s = if rng.random::<f64>() < 0.5 { 1.0 } else { -1.0 };
        Lambda([s, rng.random(), rng.random(), 0.0])
    }

    fn response_a(&self, a: &Direction, l: &Lambda) -> f64 {
        // particle 1 is |+⟩ when s = +1; P(+1) = (1 + s·a_z)/2
        let p_up = 0.5 * (1.0 + l.0[0] * a.z());
        if l.0[1] < p_up {
            1.0
        } else {
            -1.0
        }
    }

    fn response_b(&self, b: &Direction, l: &Lambda) -> f64 {
        let p_up = 0.5 * (1.0 - l.0[0] * b.z());
        if l.0[2] < p_up {
            1.0
        } else {
            -1.0
        }
    }

    fn closed_form(&self, a: &Direction, b: &Direction) -> Option<f64> {
        Some(mixture_correlation(a, b))
    }
}

pub fn builtin_sign_model() -> SignModel {
    SignModel
}

pub fn builtin_mixture_model() -> MixtureModel {
    MixtureModel
}

pub const MODEL_NAMES: [&str; 2] = ["sign", "mixture"];

pub fn model_by_name(name: &str) -> Result<Box<dyn LhvModel>> {
    match name {
        "sign" => Ok(Box::new(SignModel)),
        "mixture" => Ok(Box::new(MixtureModel)),
        other => Err(Error::Unknown {
            kind: "hidden-variable model",
            name: other.to_string(),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

const LHV_STREAM: u64 = 0x4c48_5600;

/// Monte Carlo mean of `A(a,λ)·B(b,λ)` over `n` draws. The λ sequence
/// depends only on `(seed, n)`, so estimates for different settings share
/// their draws.
pub fn estimate_correlation(
    model: &dyn LhvModel,
    a: &Direction,
    b: &Direction,
    n: usize,
    seed: u64,
) -> Result<Estimate> {
    if n < 2 {
        return Err(Error::TooFewSamples { min: 2, got: n });
    }
    let blocks = map_blocks(seed, LHV_STREAM, n, |range, rng| {
        let mut m = Moments::default();
        for _ in range {
            let lambda = model.sample(rng);
            let ra = model.response_a(a, &lambda);
            let rb = model.response_b(b, &lambda);
            // negated comparison also rejects NaN
            if !(ra.abs() <= 1.0) {
                return Err(out_of_bounds("A", ra, &lambda));
            }
            if !(rb.abs() <= 1.0) {
                return Err(out_of_bounds("B", rb, &lambda));
            }
            m.push(ra * rb);
        }
        Ok(m)
    });
    let mut total = Moments::default();
    for block in blocks {
        total = total.merge(&block?);
    }
    Ok(Estimate {
        mean: total.mean(),
        stderr: total.stderr(),
    })
}

fn out_of_bounds(which: &'static str, value: f64, lambda: &Lambda) -> Error {
    Error::ResponseOutOfBounds {
        which,
        value,
        lambda: lambda.to_string(),
    }
}

/// CHSH left side from four estimates on the same seed; the standard error
/// is the sum of the four (no covariance bookkeeping).
pub fn chsh_of_model(
    model: &dyn LhvModel,
    s: &MeterSettings,
    n: usize,
    seed: u64,
) -> Result<Estimate> {
    let pairs = [(s.a, s.b), (s.a, s.b_prime), (s.a_prime, s.b_prime), (s.a_prime, s.b)];
    let mut ests = Vec::with_capacity(4);
    for (x, y) in &pairs {
        ests.push(estimate_correlation(model, x, y, n, seed)?);
    }
    let lookup = |x: &Direction, y: &Direction| {
        pairs
            .iter()
            .position(|(p, q)| p == x && q == y)
            .map(|k| ests[k].mean)
            .expect("pair from settings")
    };
    Ok(Estimate {
        mean: chsh_with(lookup, s),
        stderr: ests.iter().map(|e| e.stderr).sum(),
    })
}

/// Closure-backed model, handy for ad-hoc responses.
pub struct FnModel<S, A, B> {
    pub name: String,
    pub sampler: S,
    pub a: A,
    pub b: B,
}

impl<S, A, B> LhvModel for FnModel<S, A, B>
where
    S: Fn(&mut ChaCha8Rng) -> Lambda + Send + Sync,
    A: Fn(&Direction, &Lambda) -> f64 + Send + Sync,
    B: Fn(&Direction, &Lambda) -> f64 + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Lambda {
        (self.sampler)(rng)
    }

    fn response_a(&self, a: &Direction, l: &Lambda) -> f64 {
        (self.a)(a, l)
    }

    fn response_b(&self, b: &Direction, l: &Lambda) -> f64 {
        (self.b)(b, l)
    }
}
