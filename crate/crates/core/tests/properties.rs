use std::f64::consts::PI;
use std::sync::Arc;

use hvbench::correlations::*;
use hvbench::ensembles::*;
use hvbench::lhv::*;
use hvbench::spin_algebra::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn direction() -> impl Strategy<Value = Direction> {
    (-1.0f64..1.0, 0.0..2.0 * PI).prop_map(|(c, phi)| Direction::from_polar(c.acos(), phi))
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn hermitian(d: usize) -> impl Strategy<Value = Operator> {
    prop::collection::vec(complex(), d * d).prop_map(move |z| {
        let mut m = Operator::zeros(d);
        for i in 0..d {
            for j in 0..d {
                let v = if i == j {
                    Complex64::new(z[i * d + j].re, 0.0)
                } else if i < j {
                    z[i * d + j]
                } else {
                    z[j * d + i].conj()
                };
                m.set(i, j, v);
            }
        }
        m
    })
}

fn state(d: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec(complex(), d)
        .prop_filter("nonzero", |v| v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3)
        .prop_map(|v| StateVector::normalized(v).unwrap())
}

/// Rodrigues rotation about a unit axis.
fn rotation(axis: &Direction, angle: f64) -> [[f64; 3]; 3] {
    let [x, y, z] = axis.components();
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
        [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
        [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn spin_along_squares_to_identity(n in direction()) {
        let s = spin_along(&n);
        prop_assert!(s.matmul(&s).unwrap().max_abs_diff(&Operator::identity(2)) < 1e-12);
        let ev = eigen(&s).unwrap();
        prop_assert!((ev[0].0 - 1.0).abs() < 1e-12);
        prop_assert!((ev[1].0 + 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectation_is_linear(r in hermitian(4), s in hermitian(4), a in -3.0f64..3.0, b in -3.0f64..3.0, psi in state(4)) {
        let combo = &r.scale(a) + &s.scale(b);
        let lhs = expectation(&psi, &combo).unwrap();
        let rhs = a * expectation(&psi, &r).unwrap() + b * expectation(&psi, &s).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn positive_operators_have_nonnegative_mean(m in prop::collection::vec(complex(), 16), psi in state(4), mix in 0.0f64..1.0) {
        // R = M†M is positive semidefinite
        let mut op = Operator::zeros(4);
        for i in 0..4 {
            for j in 0..4 {
                op.set(i, j, m[i * 4 + j]);
            }
        }
        let r = op.adjoint().matmul(&op).unwrap();
        let pure = DensityMatrix::pure(&psi);
        let mixed = &pure.operator().scale(mix) + &Operator::identity(4).scale((1.0 - mix) / 4.0);
        let rho = DensityMatrix::new(mixed).unwrap();
        prop_assert!(trace_expectation(&rho, &r).unwrap() >= -1e-10);
    }

    #[test]
    fn jacobi_reconstructs_hermitian(m in hermitian(4)) {
        let ev = eigen(&m).unwrap();
        let mut rebuilt = Operator::zeros(4);
        for (lambda, v) in &ev {
            rebuilt = &rebuilt + &Operator::outer(v, v).scale(*lambda);
        }
        prop_assert!(rebuilt.max_abs_diff(&m) < 1e-10);
        for w in ev.windows(2) {
            prop_assert!(w[0].0 >= w[1].0);
        }
    }

    #[test]
    fn singlet_depends_only_on_relative_angle(a in direction(), b in direction(), axis in direction(), angle in 0.0..2.0 * PI) {
        let rot = rotation(&axis, angle);
        let p = singlet_correlation(&a, &b);
        let q = singlet_correlation(&a.rotated(&rot), &b.rotated(&rot));
        prop_assert!((p - q).abs() < 1e-10);
        prop_assert!((p + a.dot(&b)).abs() < 1e-10);
    }

    #[test]
    fn decomposition_identity(a in direction(), b in direction()) {
        let lhs = singlet_correlation(&a, &b);
        let rhs = mixture_correlation(&a, &b) - interference_terms(&a, &b);
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn gap_reduces_to_dispersion_for_unit_trace(r in hermitian(3), psi in state(3)) {
        let rho = DensityMatrix::pure(&psi);
        let gap = von_neumann_gap(&rho, &r).unwrap();
        prop_assert!((gap - dispersion(&rho, &r).unwrap()).abs() < 1e-12);
        prop_assert!((gap - dispersion(&psi, &r).unwrap()).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn tsirelson_bound(a in direction(), ap in direction(), b in direction(), bp in direction()) {
        let s = MeterSettings { a, a_prime: ap, b, b_prime: bp };
        prop_assert!(chsh(CorrelationModel::Singlet, &s) <= 2.0 * 2f64.sqrt() + 1e-9);
        prop_assert!(chsh(CorrelationModel::Mixture, &s) <= 2.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn lhv_models_respect_bound(a in direction(), ap in direction(), b in direction(), bp in direction(), seed in any::<u64>()) {
        let s = MeterSettings { a, a_prime: ap, b, b_prime: bp };
        for name in MODEL_NAMES {
            let m = model_by_name(name).unwrap();
            let e = chsh_of_model(m.as_ref(), &s, 20_000, seed).unwrap();
            prop_assert!(e.mean <= 2.0 + 5.0 * e.stderr, "{name}: {} ± {}", e.mean, e.stderr);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn mixture_model_matches_closed_form(ta in 0.0..2.0 * PI, tb in 0.0..2.0 * PI, seed in any::<u64>()) {
        let (a, b) = (Direction::in_xz_plane(ta), Direction::in_xz_plane(tb));
        let e = estimate_correlation(&builtin_mixture_model(), &a, &b, 20_000, seed).unwrap();
        prop_assert!((e.mean - mixture_correlation(&a, &b)).abs() <= 5.0 * e.stderr);
    }
}

#[test]
fn trial_estimates_converge() {
    let (a, b) = (Direction::in_xz_plane(0.3), Direction::in_xz_plane(1.9));
    for model in [CorrelationModel::Singlet, CorrelationModel::Mixture] {
        let exact = model.correlation(&a, &b);
        let hits = (0..200u64)
            .filter(|&seed| {
                let (m, se) = estimate_trials(model, &a, &b, 4000, seed).unwrap();
                (m - exact).abs() <= 5.0 * se
            })
            .count();
        assert!(hits >= 198, "{}: {hits}/200", model.name());
    }
}

#[test]
fn sign_model_on_grid() {
    let a = Direction::in_xz_plane(0.0);
    for k in 0..50 {
        let theta = PI * k as f64 / 49.0;
        let b = Direction::in_xz_plane(theta);
        let e = estimate_correlation(&builtin_sign_model(), &a, &b, 20_000, k).unwrap();
        let exact = -1.0 + 2.0 * theta / PI;
        assert!((e.mean - exact).abs() <= 5.0 * e.stderr.max(1e-12), "{theta}: {} vs {exact}", e.mean);
    }
}

#[test]
fn lhv_results_ignore_worker_count() {
    let s = bell_config(PI / 3.0);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let m = builtin_mixture_model();
            let e = chsh_of_model(&m, &s, 50_000, 42).unwrap();
            let t = estimate_trials(CorrelationModel::Singlet, &s.a, &s.b, 50_000, 42).unwrap();
            (e.mean.to_bits(), e.stderr.to_bits(), t.0.to_bits(), t.1.to_bits())
        })
    };
    assert_eq!(run(1), run(4));
    assert_eq!(run(1), run(3));
}

#[test]
fn random_ensembles_are_dispersion_free() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let fs: [(&str, fn(&[f64], &[f64]) -> f64); 4] = [
        ("x", |x, _| x[0]),
        ("p", |_, p| p[0]),
        ("x^2", |x, _| x[0] * x[0]),
        ("xp", |x, p| x[0] * p[0]),
    ];
    for _ in 0..10 {
        let x0 = rng.random_range(-2.0..2.0);
        let p0 = rng.random_range(-2.0..2.0);
        let t = rng.random_range(0.0..3.0);
        let path: Arc<dyn PhasePath> = if rng.random_bool(0.5) {
            Arc::new(FreePath { x0: vec![x0], p0: vec![p0], mass: 1.0 })
        } else {
            Arc::new(HarmonicPath { x0: vec![x0], p0: vec![p0], mass: 1.0, omega: 0.7 })
        };
        let e = TrajectoryEnsemble::new(vec![path], 1.0).unwrap();
        for eps in DEFAULT_EPSILONS {
            assert!((integrate_coincidence(&e, t, eps).unwrap() - 1.0).abs() < 1e-8);
        }
        for (name, f) in &fs {
            let table = classical_dispersion(&e, t, f, &DEFAULT_EPSILONS).unwrap();
            assert!(table.extrapolated.abs() < 1e-6, "{name}: {:e}", table.extrapolated);
        }
    }
}
