import numpy as np
import pytest

from wickcgl.noise import (LANE_AUX, LANE_INCREMENT, LANE_STATIONARY, NoiseStream, OUState, combine_increments,
                           complex_normal, draw_increment, evolve, evolve_with, increment_variance,
                           sample_stationary, zero_start)
from wickcgl.spectral import GridSpec, SpectralField, rho_grid, semigroup


def test_draws_are_pure_functions_of_counters():
    g = GridSpec(3)
    a = NoiseStream(7, (0, 1, 2), step=5).standard_complex(g)
    b = NoiseStream(7, (0, 1, 2), step=5).standard_complex(g)
    np.testing.assert_array_equal(a, b)
    single = NoiseStream(7, (1,), step=5).standard_complex(g)
    np.testing.assert_array_equal(a[1], single)
    assert not np.allclose(a, NoiseStream(7, (0, 1, 2), step=6).standard_complex(g))
    assert not np.allclose(a, NoiseStream(8, (0, 1, 2), step=5).standard_complex(g))


def test_lanes_are_disjoint():
    g = GridSpec(2)
    r = NoiseStream(1)
    draws = [r.standard_complex(g, lane=lane) for lane in (LANE_INCREMENT, LANE_STATIONARY, LANE_AUX)]
    for i in range(3):
        for j in range(i):
            assert not np.allclose(draws[i], draws[j])


def test_advance_and_counters():
    r = NoiseStream(3, (4, 5))
    assert r.advance(2).step == 2 and r.step == 0
    assert r.counters() == {"seed": 3, "streams": [4, 5], "step": 0}
    assert NoiseStream(3).batch_shape == ()
    assert r.batch_shape == (2,)
    with pytest.raises(ValueError):
        NoiseStream(-1)


def test_standard_complex_moments():
    g = GridSpec(8)
    z = NoiseStream(0, tuple(range(200))).standard_complex(g).ravel()
    n = z.size
    assert abs(np.mean(np.abs(z) ** 2) - 1.0) < 4 * np.sqrt(1.0 / n)
    assert abs(np.mean(z.real**2) - 0.5) < 4 * np.sqrt(0.5 / n)
    assert abs(np.mean(z**2)) < 4 * np.sqrt(1.0 / n)


def test_complex_normal_variance():
    z = complex_normal(np.random.default_rng(0), (200_000,), 2.5)
    assert abs(np.mean(np.abs(z) ** 2) - 2.5) < 0.05


def test_stationary_per_mode_variance():
    g, mu, B = GridSpec(4), 1.5, 4000
    st = sample_stationary(g, mu, NoiseStream(2, tuple(range(B))))
    p = np.abs(st.Z.coeffs) ** 2
    target = 1.0 / (2.0 * rho_grid(g, mu))
    z = np.abs(p.mean(axis=0) - target) / (p.std(axis=0, ddof=1) / np.sqrt(B))
    assert np.mean(z <= 3.0) > 0.95
    np.testing.assert_allclose(st.variance(), target)


def test_exact_transition_preserves_stationarity():
    g, mu, B = GridSpec(3), 1.0, 4000
    rs = NoiseStream(5, tuple(range(B)))
    st = sample_stationary(g, mu, rs)
    for _ in range(3):
        st = evolve(st, 0.05, rs)
        rs = rs.advance()
    p = np.abs(st.Z.coeffs) ** 2
    target = 1.0 / (2.0 * rho_grid(g, mu))
    z = np.abs(p.mean(axis=0) - target) / (p.std(axis=0, ddof=1) / np.sqrt(B))
    assert np.mean(z <= 3.0) > 0.95
    assert np.isclose(st.t, 0.15)


def test_zero_start_variance_formula():
    g, mu, B = GridSpec(2), 0.5, 4000
    rs = NoiseStream(9, tuple(range(B)))
    st = zero_start(g, mu, 0.0, (B,))
    for _ in range(4):
        st = evolve(st, 0.02, rs)
        rs = rs.advance()
    target = -np.expm1(-2 * rho_grid(g, mu) * 0.08) / (2 * rho_grid(g, mu))
    np.testing.assert_allclose(st.variance(), target)
    p = np.abs(st.Z.coeffs) ** 2
    z = np.abs(p.mean(axis=0) - target) / (p.std(axis=0, ddof=1) / np.sqrt(B))
    assert np.mean(z <= 3.0) > 0.9


def test_combined_increments_reproduce_fine_path():
    g, mu, d = GridSpec(3), 2.0, 0.01
    rs = NoiseStream(4)
    st = sample_stationary(g, mu, rs)
    etas = [draw_increment(g, mu, d, rs.advance(i)) for i in range(4)]
    fine = st
    for eta in etas:
        fine = evolve_with(fine, d, eta)
    coarse = evolve_with(st, 4 * d, combine_increments(g, mu, d, etas))
    np.testing.assert_allclose(coarse.Z.coeffs, fine.Z.coeffs, atol=1e-15)
    # the combined innovation has the coarse-step variance
    np.testing.assert_allclose(
        increment_variance(g, mu, 4 * d),
        sum(np.abs(semigroup(g, (3 - i) * d, mu)) ** 2 * increment_variance(g, mu, d) for i in range(4)),
        rtol=1e-12)


def test_evolve_rejects_nonpositive_step():
    st = zero_start(GridSpec(1), 1.0)
    with pytest.raises(ValueError):
        evolve(st, 0.0, NoiseStream(0))
    with pytest.raises(ValueError):
        OUState(0.0, SpectralField.zeros(GridSpec(1)), 1.0, origin="other")
