import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wickcgl.spectral import (GridSpec, InsufficientPaddingError, ModelParams, SpectralField, coeffs_to_physical,
                              conj_coeffs, dealiased_product, gradient_physical, phi1_weight, physical_to_coeffs,
                              rho, semigroup, semigroup_multiplier, set_fft_workers, theta)

from conftest import random_field_coeffs


def test_layout_and_index():
    g = GridSpec(3, 2)
    assert g.shape == (7, 7) and g.n == 14
    assert g.index((0, 0)) == (3, 3)
    assert g.index((-3, 2)) == (0, 5)
    with pytest.raises(IndexError):
        g.index((4, 0))
    assert g.k_inf[0, 3] == 3


@pytest.mark.parametrize("N,pad", [(-1, 2), (2, 0), (1.5, 2)])
def test_gridspec_rejects_bad_values(N, pad):
    with pytest.raises(ValueError):
        GridSpec(N, pad)


def test_alias_free_degree():
    assert GridSpec(4, 2).max_alias_free_degree() == 3
    GridSpec(4, 2).check_degree(3)
    with pytest.raises(InsufficientPaddingError):
        GridSpec(4, 2).check_degree(4)
    GridSpec(4, 3).check_degree(5)


def test_single_mode_transform():
    g = GridSpec(2, 2)
    f = SpectralField.mode(g, (1, -2), 0.5 - 0.25j)
    x1, x2 = g.points()
    expected = (0.5 - 0.25j) * np.exp(2j * math.pi * (x1 - 2 * x2))
    np.testing.assert_allclose(f.to_physical(), expected, atol=1e-14)


@given(st.integers(0, 6), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_round_trip(N, pad, seed):
    g = GridSpec(N, pad)
    c = random_field_coeffs(np.random.default_rng(seed), g, batch=(2,))
    np.testing.assert_allclose(physical_to_coeffs(coeffs_to_physical(c, g), g), c, atol=1e-13)


@given(st.integers(0, 5), st.integers(0, 2**32 - 1))
def test_parseval(N, seed):
    g = GridSpec(N, 2)
    f = SpectralField(g, random_field_coeffs(np.random.default_rng(seed), g))
    assert np.isclose(np.mean(np.abs(f.to_physical()) ** 2), f.l2_squared(), rtol=1e-12)


def test_conjugate_field():
    g = GridSpec(3, 2)
    f = SpectralField(g, random_field_coeffs(np.random.default_rng(1), g))
    np.testing.assert_allclose(f.conj().to_physical(), np.conj(f.to_physical()), atol=1e-13)
    real = SpectralField.from_physical(g, f.to_physical().real)
    assert real.is_real()
    assert not f.is_real()
    np.testing.assert_allclose(conj_coeffs(conj_coeffs(f.coeffs)), f.coeffs)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_dealiased_cubic_matches_direct_convolution(N):
    g = GridSpec(N, 2)
    rng = np.random.default_rng(N)
    a = SpectralField(g, random_field_coeffs(rng, g))
    b = SpectralField(g, random_field_coeffs(rng, g))
    got = dealiased_product([a, a, b], [False, True, False]).coeffs
    # direct sum over k1 - k2 + k3 = k of a(k1) conj(a(-k2)) b(k3)
    ac = conj_coeffs(a.coeffs)
    want = np.zeros(g.shape, dtype=complex)
    ks = [(i, j) for i in range(-N, N + 1) for j in range(-N, N + 1)]
    for k1 in ks:
        for k2 in ks:
            for k3 in ks:
                k = (k1[0] + k2[0] + k3[0], k1[1] + k2[1] + k3[1])
                if max(abs(k[0]), abs(k[1])) <= N:
                    want[g.index(k)] += a.coefficient(k1) * ac[g.index(k2)] * b.coefficient(k3)
    np.testing.assert_allclose(got, want, atol=1e-13)


def test_dealiased_product_refuses_insufficient_padding():
    g = GridSpec(2, 1)
    f = SpectralField.constant(g)
    with pytest.raises(InsufficientPaddingError):
        dealiased_product([f, f])


def test_symbols():
    assert rho((0, 0), 2.0) == 1.0
    assert math.isclose(rho((1, 1), 0.5), 1.0 + 4 * math.pi**2)
    assert math.isclose(theta((2, 0)), 16 * math.pi**2)
    g = GridSpec(2)
    P = semigroup(g, 0.1, 1.5)
    assert np.isclose(P[g.index((1, -2))], semigroup_multiplier((1, -2), 0.1, 1.5))
    with pytest.raises(ValueError):
        semigroup(g, -1.0, 1.0)


def test_semigroup_property():
    g = GridSpec(3)
    np.testing.assert_allclose(semigroup(g, 0.3, 2.0) * semigroup(g, 0.2, 2.0), semigroup(g, 0.5, 2.0), rtol=1e-13)


@pytest.mark.parametrize("shift", [0.0, 7.0])
def test_phi1_weight_is_the_integral(shift):
    from scipy.integrate import quad

    g = GridSpec(1)
    a = 1.0 + 4 * math.pi**2 * 2.0 * 1 + 1j * 4 * math.pi**2 + shift
    re = quad(lambda s: np.exp(-a * s).real, 0, 0.01)[0]
    im = quad(lambda s: np.exp(-a * s).imag, 0, 0.01)[0]
    w = phi1_weight(g, 0.01, 2.0, shift)[g.index((1, 0))]
    assert np.isclose(w, re + 1j * im, rtol=1e-10)


def test_gradient_of_mode():
    g = GridSpec(2)
    f = SpectralField.mode(g, (1, 2))
    d1, d2 = gradient_physical(f)
    np.testing.assert_allclose(d1, 2j * math.pi * f.to_physical(), atol=1e-12)
    np.testing.assert_allclose(d2, 4j * math.pi * f.to_physical(), atol=1e-12)


def test_field_arithmetic_and_grid_mismatch():
    g = GridSpec(2)
    f = SpectralField.constant(g, 2.0)
    assert ((f + f) - f * 0.5).coefficient((0, 0)) == 3.0
    assert (-f).coefficient((0, 0)) == -2.0
    with pytest.raises(ValueError):
        f + SpectralField.constant(GridSpec(3), 1.0)


def test_fft_workers_do_not_change_results():
    g = GridSpec(8)
    c = random_field_coeffs(np.random.default_rng(3), g, batch=(4,))
    a = coeffs_to_physical(c, g)
    set_fft_workers(3)
    try:
        b = coeffs_to_physical(c, g)
    finally:
        set_fft_workers(1)
    np.testing.assert_array_equal(a, b)
    with pytest.raises(ValueError):
        set_fft_workers(0)


@pytest.mark.parametrize("kw", [dict(mu=0.0), dict(mu=1.0, nu=-1.0), dict(mu=1.0, m=0), dict(mu=1.0, lam=-1.0)])
def test_model_params_validation(kw):
    with pytest.raises(ValueError):
        ModelParams(**kw)


def test_linear_params():
    assert ModelParams(mu=1.0, nu=0.0).is_linear
    assert not ModelParams(mu=1.0).is_linear
