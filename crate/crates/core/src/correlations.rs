//! Two-meter spin correlations: the singlet prediction, the "one system at a
//! time" mixture hypothesis, the CHSH functional and per-trial sampling.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rng::{map_blocks, Moments};
use crate::spin_algebra::{
    expectation, singlet, spin_along, tensor, Direction, Operator, StateVector,
};

/// The four meter orientations of a CHSH run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeterSettings {
    pub a: Direction,
    pub a_prime: Direction,
    pub b: Direction,
    pub b_prime: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CorrelationModel {
    Singlet,
    Mixture,
}

impl CorrelationModel {
    pub fn correlation(&self, a: &Direction, b: &Direction) -> f64 {
        match self {
            CorrelationModel::Singlet => singlet_correlation(a, b),
            CorrelationModel::Mixture => mixture_correlation(a, b),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CorrelationModel::Singlet => "singlet",
            CorrelationModel::Mixture => "mixture",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "singlet" => Ok(CorrelationModel::Singlet),
            "mixture" => Ok(CorrelationModel::Mixture),
            other => Err(Error::Unknown {
                kind: "correlation model",
                name: other.to_string(),
            }),
        }
    }
}

/// `⟨Ψ_S| σ_a ⊗ σ_b |Ψ_S⟩`, evaluated as a 4×4 expectation.
pub fn singlet_correlation(a: &Direction, b: &Direction) -> f64 {
    let m = tensor(&spin_along(a), &spin_along(b));
    expectation(&singlet(), &m).expect("4x4 Hermitian on a normalized 4-vector")
}

/// `⟨s|σ|t⟩` for σz basis labels.
fn element(op: &Operator, row: usize, col: usize) -> num_complex::Complex64 {
    op.get(row, col)
}

const PLUS: usize = 0;
const MINUS: usize = 1;

/// Equal-weight average over the product states `|+⟩|−⟩` and `|−⟩|+⟩`:
/// `½[⟨+|σa|+⟩⟨−|σb|−⟩ + ⟨−|σa|−⟩⟨+|σb|+⟩]`.
pub fn mixture_correlation(a: &Direction, b: &Direction) -> f64 {
    let sa = spin_along(a);
    let sb = spin_along(b);
    let value = 0.5
        * (element(&sa, PLUS, PLUS) * element(&sb, MINUS, MINUS)
            + element(&sa, MINUS, MINUS) * element(&sb, PLUS, PLUS));
    value.re
}

/// Half the cross terms `⟨+|σa|−⟩⟨−|σb|+⟩ + ⟨−|σa|+⟩⟨+|σb|−⟩` that the
/// mixture drops. Satisfies `singlet = mixture − interference`.
pub fn interference_terms(a: &Direction, b: &Direction) -> f64 {
    let sa = spin_along(a);
    let sb = spin_along(b);
    let value = 0.5
        * (element(&sa, PLUS, MINUS) * element(&sb, MINUS, PLUS)
            + element(&sa, MINUS, PLUS) * element(&sb, PLUS, MINUS));
    value.re
}

/// `|P(a,b) − P(a,b′)| + |P(a′,b′) + P(a′,b)|` for an arbitrary correlation map.
pub fn chsh_with<F>(p: F, s: &MeterSettings) -> f64
where
    F: Fn(&Direction, &Direction) -> f64,
{
    (p(&s.a, &s.b) - p(&s.a, &s.b_prime)).abs() + (p(&s.a_prime, &s.b_prime) + p(&s.a_prime, &s.b)).abs()
}

pub fn chsh(model: CorrelationModel, s: &MeterSettings) -> f64 {
    chsh_with(|a, b| model.correlation(a, b), s)
}

/// Coplanar settings in the xz-plane: `a` at 0, `b = a′` at θ, `b′` at 2θ.
pub fn bell_config(theta: f64) -> MeterSettings {
    let b = Direction::in_xz_plane(theta);
    MeterSettings {
        a: Direction::z_axis(),
        a_prime: b,
        b,
        b_prime: Direction::in_xz_plane(2.0 * theta),
    }
}

/// Closed form of the mixture CHSH on [`bell_config`]:
/// `|cos 2θ − cos θ| + |cos θ|·|cos 2θ + cos θ|`.
pub fn mixture_lhs(theta: f64) -> f64 {
    let (c1, c2) = (theta.cos(), (2.0 * theta).cos());
    (c2 - c1).abs() + c1.abs() * (c2 + c1).abs()
}

/// Which product state a mixture trial was prepared in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PreLabel {
    /// `|+⟩|−⟩`
    PlusMinus,
    /// `|−⟩|+⟩`
    MinusPlus,
    /// singlet trials carry no pre-measurement label
    None,
}

impl fmt::Display for PreLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PreLabel::PlusMinus => "PM",
            PreLabel::MinusPlus => "MP",
            PreLabel::None => "NA",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub index: usize,
    pub label: PreLabel,
    pub a_outcome: i8,
    pub b_outcome: i8,
    pub a: Direction,
    pub b: Direction,
}

#[derive(Debug, Clone)]
pub struct TrialSample {
    pub records: Vec<TrialRecord>,
    pub estimate: f64,
    pub stderr: f64,
}

/// `(I + s·σ_n)/2`, the projector onto outcome `s ∈ {+1, −1}` along `n`.
fn outcome_projector(n: &Direction, s: f64) -> Operator {
    let id = Operator::identity(2);
    (&id + &spin_along(n).scale(s)).scale(0.5)
}

/// Precomputed per-trial sampling tables for one (model, a, b).
enum Sampler {
    /// cumulative probabilities over (++, +−, −+, −−)
    Singlet([f64; 4]),
    /// P(A=+1), P(B=+1) for the PM and MP preparations
    Mixture { pm: (f64, f64), mp: (f64, f64) },
}

const OUTCOMES: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

impl Sampler {
    fn new(model: CorrelationModel, a: &Direction, b: &Direction) -> Self {
        match model {
            CorrelationModel::Singlet => {
                let psi = singlet();
                let mut cum = [0.0; 4];
                let mut acc = 0.0;
                for (k, (sa, sb)) in OUTCOMES.iter().enumerate() {
                    let proj = tensor(
                        &outcome_projector(a, *sa as f64),
                        &outcome_projector(b, *sb as f64),
                    );
                    acc += expectation(&psi, &proj).unwrap().max(0.0);
                    cum[k] = acc;
                }
                cum[3] = 1.0;
                Sampler::Singlet(cum)
            }
            CorrelationModel::Mixture => {
                let up = StateVector::up();
                let down = StateVector::down();
                let pa = outcome_projector(a, 1.0);
                let pb = outcome_projector(b, 1.0);
                let born = |s: &StateVector, p: &Operator| expectation(s, p).unwrap().clamp(0.0, 1.0);
                Sampler::Mixture {
                    pm: (born(&up, &pa), born(&down, &pb)),
                    mp: (born(&down, &pa), born(&up, &pb)),
                }
            }
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> (PreLabel, i8, i8) {
        match self {
            Sampler::Singlet(cum) => {
                let u: f64 = rng.random();
                let k = cum.iter().position(|&c| u < c).unwrap_or(3);
                let (a, b) = OUTCOMES[k];
                (PreLabel::None, a, b)
            }
            Sampler::Mixture { pm, mp } => {
                let (label, (pa, pb)) = if rng.random::<f64>() < 0.5 {
                    (PreLabel::PlusMinus, pm)
                } else {
                    (PreLabel::MinusPlus, mp)
                };
                let a = if rng.random::<f64>() < *pa { 1 } else { -1 };
                let b = if rng.random::<f64>() < *pb { 1 } else { -1 };
                (label, a, b)
            }
        }
    }
}

fn stream_id(model: CorrelationModel) -> u64 {
    match model {
        CorrelationModel::Singlet => 0x5151,
        CorrelationModel::Mixture => 0x4d49,
    }
}

fn run_trials(
    model: CorrelationModel,
    a: &Direction,
    b: &Direction,
    n: usize,
    seed: u64,
    keep: bool,
) -> Result<(Vec<TrialRecord>, Moments)> {
    if n == 0 {
        return Err(Error::TooFewSamples { min: 1, got: 0 });
    }
    let sampler = Sampler::new(model, a, b);
    let blocks = map_blocks(seed, stream_id(model), n, |range, rng| {
        let mut moments = Moments::default();
        let mut records = Vec::with_capacity(if keep { range.len() } else { 0 });
        for index in range {
            let (label, ao, bo) = sampler.draw(rng);
            moments.push((ao * bo) as f64);
            if keep {
                records.push(TrialRecord {
                    index,
                    label,
                    a_outcome: ao,
                    b_outcome: bo,
                    a: *a,
                    b: *b,
                });
            }
        }
        (records, moments)
    });
    let mut all = Vec::with_capacity(if keep { n } else { 0 });
    let mut total = Moments::default();
    for (records, moments) in blocks {
        all.extend(records);
        total = total.merge(&moments);
    }
    Ok((all, total))
}

/// Measures `n` systems one by one under `model`; returns the trial records
/// with the estimated correlation `mean(A·B)` and its standard error.
pub fn sample_trials(
    model: CorrelationModel,
    a: &Direction,
    b: &Direction,
    n: usize,
    seed: u64,
) -> Result<TrialSample> {
    let (records, m) = run_trials(model, a, b, n, seed, true)?;
    Ok(TrialSample {
        records,
        estimate: m.mean(),
        stderr: if n >= 2 { m.stderr() } else { 0.0 },
    })
}

/// Same draws as [`sample_trials`] without materializing the records.
pub fn estimate_trials(
    model: CorrelationModel,
    a: &Direction,
    b: &Direction,
    n: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let (_, m) = run_trials(model, a, b, n, seed, false)?;
    Ok((m.mean(), if n >= 2 { m.stderr() } else { 0.0 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    #[test]
    fn singlet_examples() {
        let z = Direction::z_axis();
        assert_abs_diff_eq!(singlet_correlation(&z, &z), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            singlet_correlation(&z, &Direction::in_xz_plane(FRAC_PI_2)),
            0.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            singlet_correlation(&z, &Direction::in_xz_plane(FRAC_PI_3)),
            -0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn mixture_examples() {
        let z = Direction::z_axis();
        for theta in [0.1, 0.7, 2.0] {
            let b = Direction::in_xz_plane(theta);
            assert_abs_diff_eq!(mixture_correlation(&z, &b), -theta.cos(), epsilon = 1e-12);
            assert_abs_diff_eq!(mixture_correlation(&b, &b), -theta.cos().powi(2), epsilon = 1e-12);
        }
        let eq = Direction::in_xz_plane(FRAC_PI_2);
        for a in [z, Direction::x_axis(), Direction::from_polar(1.0, 2.0)] {
            assert_abs_diff_eq!(mixture_correlation(&a, &eq), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn chsh_examples() {
        assert_abs_diff_eq!(
            chsh(CorrelationModel::Singlet, &bell_config(FRAC_PI_4)),
            1.0 + 2.0 * std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            chsh(CorrelationModel::Singlet, &bell_config(FRAC_PI_3)),
            2.5,
            epsilon = 1e-12
        );
        for k in 0..100 {
            let theta = 2.0 * PI * k as f64 / 100.0;
            assert!(chsh(CorrelationModel::Mixture, &bell_config(theta)) <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn bell_config_angles() {
        let s = bell_config(0.0);
        for d in [s.a, s.a_prime, s.b, s.b_prime] {
            assert_eq!(d, Direction::z_axis());
        }
        for theta in [FRAC_PI_4, 0.3, 1.2] {
            let s = bell_config(theta);
            assert_abs_diff_eq!(s.a.angle_to(&s.b_prime), 2.0 * theta, epsilon = 1e-12);
            assert_abs_diff_eq!(s.b.angle_to(&s.a_prime), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.b.angle_to(&s.b_prime), theta, epsilon = 1e-12);
            assert_abs_diff_eq!(s.a.angle_to(&s.a_prime), theta, epsilon = 1e-12);
            for d in [s.a, s.a_prime, s.b, s.b_prime] {
                assert_eq!(d.y(), 0.0);
            }
        }
    }

    #[test]
    fn mixture_lhs_examples() {
        assert_abs_diff_eq!(mixture_lhs(0.0), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mixture_lhs(FRAC_PI_2), 1.0, epsilon = 1e-15);
        for theta in [0.0, 0.4, 1.1, 2.5, 4.0] {
            assert_abs_diff_eq!(
                mixture_lhs(theta),
                chsh(CorrelationModel::Mixture, &bell_config(theta)),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn interference_examples() {
        let z = Direction::z_axis();
        let x = Direction::x_axis();
        assert_abs_diff_eq!(interference_terms(&z, &z), 0.0);
        assert_abs_diff_eq!(interference_terms(&x, &x), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            singlet_correlation(&x, &x),
            mixture_correlation(&x, &x) - interference_terms(&x, &x),
            epsilon = 1e-12
        );
        let b = Direction::in_xz_plane(0.8);
        assert_abs_diff_eq!(
            mixture_correlation(&z, &b) - interference_terms(&z, &b),
            singlet_correlation(&z, &b),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(interference_terms(&z, &b), 0.0, epsilon = 1e-15);
        // a tilted: singlet − mixture = −cos θab + cos θa cos θb
        let (ta, tb) = (0.5, 1.3);
        let a = Direction::in_xz_plane(ta);
        let b = Direction::in_xz_plane(tb);
        assert_abs_diff_eq!(
            -interference_terms(&a, &b),
            -(tb - ta).cos() + ta.cos() * tb.cos(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn sample_rejects_zero() {
        let z = Direction::z_axis();
        assert!(matches!(
            sample_trials(CorrelationModel::Mixture, &z, &z, 0, 1),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn mixture_trials_anticorrelated_on_z() {
        let z = Direction::z_axis();
        let s = sample_trials(CorrelationModel::Mixture, &z, &z, 100_000, 3).unwrap();
        assert_eq!(s.estimate, -1.0);
        for r in &s.records {
            match r.label {
                PreLabel::PlusMinus => assert_eq!((r.a_outcome, r.b_outcome), (1, -1)),
                PreLabel::MinusPlus => assert_eq!((r.a_outcome, r.b_outcome), (-1, 1)),
                PreLabel::None => panic!("mixture trial without label"),
            }
        }
        let pm = s
            .records
            .iter()
            .filter(|r| r.label == PreLabel::PlusMinus)
            .count() as f64;
        assert!((pm / 1e5 - 0.5).abs() < 0.01);
    }

    #[test]
    fn singlet_trials_match_closed_form() {
        let z = Direction::z_axis();
        let b = Direction::in_xz_plane(FRAC_PI_3);
        let (est, se) = estimate_trials(CorrelationModel::Singlet, &z, &b, 1_000_000, 11).unwrap();
        assert!((est + 0.5).abs() <= 4.0 * se, "{est} ± {se}");
    }

    #[test]
    fn mixture_trials_match_cos_squared() {
        let a = Direction::in_xz_plane(FRAC_PI_3);
        let (est, se) = estimate_trials(CorrelationModel::Mixture, &a, &a, 1_000_000, 12).unwrap();
        assert!((est + 0.25).abs() <= 4.0 * se, "{est} ± {se}");
    }

    #[test]
    fn records_and_estimate_agree() {
        let a = Direction::in_xz_plane(0.4);
        let b = Direction::from_polar(1.0, 0.3);
        let s = sample_trials(CorrelationModel::Singlet, &a, &b, 5000, 9).unwrap();
        let (est, se) = estimate_trials(CorrelationModel::Singlet, &a, &b, 5000, 9).unwrap();
        assert_eq!(s.estimate, est);
        assert_eq!(s.stderr, se);
        let mean: f64 = s
            .records
            .iter()
            .map(|r| (r.a_outcome * r.b_outcome) as f64)
            .sum::<f64>()
            / 5000.0;
        assert_eq!(mean, est);
        assert!(s.records.iter().enumerate().all(|(i, r)| r.index == i));
    }
}
