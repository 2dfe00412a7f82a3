import itertools
from math import comb, factorial

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wickcgl import kernels
from wickcgl.noise import NoiseStream, draw_increment, evolve_with, sample_stationary
from wickcgl.spectral import GridSpec, InsufficientPaddingError, SpectralField, rho_grid, theta_grid
from wickcgl.wick import (WickFamily, change_constant_physical, chaos_covariance_oracle, chaos_covariance_spectrum,
                          family_indices, shift_wick_family, wick_constant, wick_family, wick_point)


def brute_force_covariance(k, l, omega, grid, mu):
    """Oracle: k! l! sum over explicit tuples j_1..j_k, j'_1..j'_l of prod 1/(2 rho)."""
    g = 1.0 / (2.0 * rho_grid(grid, mu))
    ks = [(a, b) for a in grid.wavenumbers for b in grid.wavenumbers]
    total = 0.0
    for tup in itertools.product(ks, repeat=k + l):
        s1 = sum(t[0] for t in tup[:k]) - sum(t[0] for t in tup[k:])
        s2 = sum(t[1] for t in tup[:k]) - sum(t[1] for t in tup[k:])
        if (s1, s2) == tuple(omega):
            total += np.prod([g[grid.index(t)] for t in tup])
    return factorial(k) * factorial(l) * total


def test_family_indices():
    assert family_indices(1) == [(1, 0), (1, 1), (2, 0), (2, 1)]
    assert (3, 2) in family_indices(2) and (3, 3) not in family_indices(2)


def test_wick_point_scalar_and_errors():
    assert wick_point(2.0, 1.0, 1, 1) == 3.0
    assert isinstance(wick_point(1j, 0.0, 2, 0), complex)
    with pytest.raises(ValueError):
        wick_point(1.0, -1.0, 1, 1)
    with pytest.raises(ValueError):
        wick_point(1.0, 1.0, -1, 1)


@given(k=st.integers(0, 4), l=st.integers(0, 4), c=st.floats(0.0, 2.0),
       a=st.complex_numbers(max_magnitude=2.0), seed=st.integers(0, 2**32 - 1))
def test_appell_shift(k, l, c, a, seed):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    lhs = kernels.wick_power(z + a, c, k, l)
    rhs = sum(comb(k, i) * comb(l, j) * a**i * np.conj(a) ** j * kernels.wick_power(z, c, k - i, l - j)
              for i in range(k + 1) for j in range(l + 1))
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-9 * (1 + np.abs(lhs).max()))


def test_wick_constant_is_pointwise_variance():
    g, mu = GridSpec(4), 1.0
    c = wick_constant(g, mu)
    assert np.isclose(c, np.sum(1.0 / (2.0 * rho_grid(g, mu))))
    st_ = sample_stationary(g, mu, NoiseStream(0, tuple(range(400))))
    m = np.mean(np.abs(st_.physical()) ** 2)
    assert abs(m - c) < 0.05 * c


def test_wick_constant_grows_logarithmically():
    mu = 1.0
    cs = [wick_constant(GridSpec(N), mu) for N in (16, 32, 64, 128)]
    d = np.diff(cs)
    # each doubling adds about log(2) / (4 pi mu)
    np.testing.assert_allclose(d[1:], np.log(2) / (4 * np.pi * mu), rtol=0.05)


def test_family_power_cache_and_conjugation():
    g = GridSpec(3, 2)
    st_ = sample_stationary(g, 1.0, NoiseStream(1))
    fam = wick_family(st_, m=1)
    assert fam.power(1, 0) is st_.Z
    assert fam.power(1, 1) is fam.power(1, 1)
    np.testing.assert_allclose(fam.power(1, 2).coeffs, fam.power(2, 1).conj().coeffs)
    np.testing.assert_allclose(fam.power(0, 0).to_physical(), 1.0)
    with pytest.raises(KeyError):
        fam.power(3, 0)
    np.testing.assert_allclose(fam.physical(2, 1), kernels.wick_power(st_.physical(), fam.c, 2, 1))
    assert set(fam.powers) == set(family_indices(1))


def test_family_refuses_aliased_power():
    g = GridSpec(3, 1)
    fam = WickFamily(Z=SpectralField.constant(g, 1.0), c=0.5, m=1)
    with pytest.raises(InsufficientPaddingError):
        fam.power(1, 1)


def test_wick_powers_are_centred():
    g, mu = GridSpec(3), 1.0
    st_ = sample_stationary(g, mu, NoiseStream(2, tuple(range(2000))))
    c = wick_constant(g, mu)
    for k, l in [(1, 1), (2, 1), (2, 2)]:
        x = kernels.wick_power(st_.physical(), c, k, l).mean(axis=(-2, -1))
        se = np.sqrt(np.mean(np.abs(x) ** 2) / x.size)
        assert abs(x.mean()) < 4 * se


def test_shifted_family_is_hermite_of_difference():
    g, mu, d = GridSpec(3, 2), 1.0, 0.05
    rs = NoiseStream(3, (0, 1))
    c = wick_constant(g, mu)
    zs = sample_stationary(g, mu, rs)
    eta = draw_increment(g, mu, d, rs)
    zt = evolve_with(zs, d, eta)
    fam_s, fam_t = wick_family(zs, 1, c), wick_family(zt, 1, c)
    shifted = shift_wick_family(fam_s, d, fam_t, mu)
    np.testing.assert_allclose(shifted.Z.coeffs, eta, atol=1e-14)
    zp = shifted.Z.to_physical()
    for i, j in family_indices(1):
        np.testing.assert_allclose(shifted.physical(i, j), kernels.wick_power(zp, c, i, j), atol=1e-12)


def test_change_constant():
    g = GridSpec(2, 2)
    fam = wick_family(sample_stationary(g, 1.0, NoiseStream(4)), 2)
    for k, l in [(2, 1), (3, 2)]:
        np.testing.assert_allclose(change_constant_physical(fam, 0.3, k, l),
                                   kernels.wick_power(fam.z_physical(), 0.3, k, l), atol=1e-12)


@pytest.mark.parametrize("kl", [(1, 0), (1, 1), (2, 1)])
@pytest.mark.parametrize("omega", [(0, 0), (1, 0), (1, -1), (2, 2)])
def test_oracle_matches_explicit_enumeration(kl, omega):
    g, mu = GridSpec(1), 1.0
    assert np.isclose(chaos_covariance_oracle(*kl, omega, g, mu), brute_force_covariance(*kl, omega, g, mu),
                      rtol=1e-12, atol=1e-300)


def test_oracle_gaussian_and_symmetry():
    g, mu = GridSpec(2), 0.7
    spec = chaos_covariance_spectrum(1, 0, g, mu)
    np.testing.assert_allclose(spec, 1.0 / (2.0 * rho_grid(g, mu)), rtol=1e-14)
    s21 = chaos_covariance_spectrum(2, 1, g, mu)
    np.testing.assert_allclose(s21, s21[::-1, ::-1], rtol=1e-12)
    np.testing.assert_allclose(s21, s21.T, rtol=1e-12)
    np.testing.assert_allclose(chaos_covariance_spectrum(1, 2, g, mu), s21[::-1, ::-1], rtol=1e-12)


def test_oracle_with_lag():
    g, mu, lag = GridSpec(2), 1.0, 0.03
    i = g.index((1, 1))
    r, th = rho_grid(g, mu)[i], theta_grid(g)[i]
    want = np.exp(-(r + 1j * th) * lag) / (2 * r)
    assert np.isclose(chaos_covariance_oracle(1, 0, (1, 1), g, mu, lag=lag), want, rtol=1e-13)
    assert np.isclose(chaos_covariance_oracle(1, 1, (1, 0), g, mu, lag=0.0),
                      chaos_covariance_oracle(1, 1, (1, 0), g, mu), rtol=1e-13)


def test_oracle_size_guard():
    with pytest.raises(ValueError):
        chaos_covariance_oracle(3, 2, (0, 0), GridSpec(1), 1.0)
    with pytest.raises(ValueError):
        chaos_covariance_oracle(1, 1, (0, 0), GridSpec(5), 1.0)
    with pytest.raises(ValueError):
        chaos_covariance_oracle(0, 0, (0, 0), GridSpec(1), 1.0)
    assert chaos_covariance_oracle(1, 0, (5, 0), GridSpec(1), 1.0) == 0.0
