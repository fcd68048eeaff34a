"""Quick checks that the extension loads and agrees with closed forms.

Build with `cargo build -p hvbench-python --release`, then put
target/release/libhvbench_py.so on PYTHONPATH as hvbench_py.so.
"""

import math
import tempfile

import hvbench_py as hv


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    z = hv.Direction(0.0, 0.0, 1.0)
    x = hv.Direction.in_xz_plane(math.pi / 2)
    close(z.angle_to(x), math.pi / 2, 1e-12)
    close(hv.singlet_correlation(z, x), 0.0, 1e-12)

    s = hv.bell_config(math.pi / 3)
    close(hv.chsh("singlet", s), 2.5, 1e-12)
    assert abs(hv.chsh("mixture", s)) <= 2.0 + 1e-12

    records, est, err = hv.sample_trials("singlet", z, z, 2000, 1)
    assert len(records) == 2000
    assert all(a * b == -1 for _, _, a, b in records)
    close(est, -1.0, 1e-12)

    for m in hv.lhv_models():
        v, e = hv.lhv_chsh(m, s, 20000, 3)
        assert abs(v) <= 2.0 + 4 * e, (m, v, e)

    assert [g for _, g in hv.gap_table([2, 3, 4])] == [1.0, 2.0, 3.0]
    _, extrapolated = hv.classical_dispersion("x", 0.3, 0.7, 1.0)
    close(extrapolated, 0.0, 1e-6)

    w = hv.wave_preset("free-gaussian", grid_points=512)
    n0 = w.norm()
    w1 = w.evolve(1e-3, 200)
    close(w1.norm(), n0, 1e-10)
    assert w1.width() > w.width()
    samples = w1.sample_born(2000, 7)
    assert w1.ks_distance(samples) < hv.ks_critical_1pct(2000)

    h = hv.wave_preset("harmonic-ground", grid_points=512)
    hj, cont = h.residuals(1e-3)
    assert hj < 1e-3 and cont < 1e-3, (hj, cont)

    verdict, *_ = hv.two_particle_preset("two-particle-product", 64).factorization_test(200, 1)
    assert verdict == "local", verdict
    verdict, *_ = hv.two_particle_preset("two-particle-entangled", 64).factorization_test(200, 1)
    assert verdict == "nonlocal", verdict

    with tempfile.TemporaryDirectory() as d:
        assert hv.run_cli(["chsh-scan", "--theta-steps", "36", "--out", d]) == 0

    try:
        hv.Direction(0.0, 0.0, 0.0)
    except ValueError:
        pass
    else:
        raise AssertionError("zero direction accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
