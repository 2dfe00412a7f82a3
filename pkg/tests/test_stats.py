import numpy as np
import pytest

from wickcgl.stats import block_bootstrap_ci, bootstrap_slope, mean_se, ols_line, radial_profile_slope


def test_ols_exact_line():
    x = np.arange(5.0)
    fit = ols_line(x, 3.0 - 2.0 * x)
    assert np.isclose(fit.slope, -2.0) and np.isclose(fit.intercept, 3.0)
    assert fit.se < 1e-12 and fit.n == 5
    with pytest.raises(ValueError):
        ols_line([0, 1], [0, 1])


def test_bootstrap_se_tracks_classical_se():
    rng = np.random.default_rng(0)
    x = np.linspace(0, 10, 200)
    y = 1.0 + 0.5 * x + rng.standard_normal(200)
    fit = ols_line(x, y)
    boot = bootstrap_slope(x, y, 2000, np.random.default_rng(1))
    assert boot.slope == fit.slope
    assert abs(boot.se / fit.se - 1.0) < 0.15


def test_block_bootstrap_ci_covers_and_shrinks():
    rng = np.random.default_rng(2)
    # AR(1) series with mean 1
    x = np.empty(4000)
    x[0] = 0.0
    for i in range(1, x.size):
        x[i] = 0.8 * x[i - 1] + rng.standard_normal()
    x += 1.0
    m, lo, hi = block_bootstrap_ci(x, rng=np.random.default_rng(3))
    assert lo < m < hi
    assert lo < 1.0 < hi
    _, lo2, hi2 = block_bootstrap_ci(x[:1000], rng=np.random.default_rng(3))
    assert (hi2 - lo2) > 1.4 * (hi - lo)
    with pytest.raises(ValueError):
        block_bootstrap_ci([1.0])


def test_block_bootstrap_deterministic():
    x = np.sin(np.arange(100.0))
    assert block_bootstrap_ci(x) == block_bootstrap_ci(x)
    assert block_bootstrap_ci(x, block=7)[0] == pytest.approx(x.mean())


def test_mean_se():
    m, se = mean_se(np.array([[1.0, 2.0], [3.0, 4.0]]))
    np.testing.assert_allclose(m, [2.0, 3.0])
    np.testing.assert_allclose(se, [1.0, 1.0])


def test_radial_profile_slope():
    k = np.arange(0, 20, dtype=float)
    fit = radial_profile_slope((1 + k) ** -2.0, k, 1.0, 15.0)
    assert np.isclose(fit.slope, -2.0) and fit.n == 15
