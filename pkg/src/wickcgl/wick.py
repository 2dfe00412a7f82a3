"""Renormalized powers of the truncated Gaussian field.

For a centred complex Gaussian ``z`` with ``E|z|^2 = c`` the Wick power
``:z^k conj(z)^l:`` is the complex Hermite polynomial

    H_{k,l}(z; c) = sum_{r=0}^{min(k,l)} (-1)^r r! C(k,r) C(l,r) c^r z^(k-r) conj(z)^(l-r).

Applied pointwise to the Galerkin field ``Z_N`` with ``c`` its pointwise
variance, it is the projection of ``Z_N^k conj(Z_N)^l`` onto the
``(k, l)``-th chaos.  The family is Appell: ``H_{k,l}(z + a; c) =
sum C(k,i) C(l,j) a^i conj(a)^j H_{k-i,l-j}(z; c)``, which is what lets the
renormalized drift be evaluated as a single polynomial in ``v + Z``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np
from scipy.signal import convolve2d

from . import kernels
from .noise import OUState
from .spectral import GridSpec, SpectralField, rho_grid, semigroup, theta_grid


def wick_constant(grid: GridSpec, mu: float, profile: np.ndarray | None = None) -> float:
    """Pointwise variance ``sum_{|k|_inf <= N} sigma_k^2`` of the truncated field.

    ``profile`` is the per-mode variance array; the stationary profile
    ``1/(2 rho_k)`` is used when omitted.
    """
    if profile is None:
        profile = 1.0 / (2.0 * rho_grid(grid, mu))
    return float(np.sum(profile))


def state_wick_constant(state: OUState) -> float:
    return wick_constant(state.grid, state.mu, state.variance())


def wick_point(z, c: float, k: int, l: int):
    """``:z^k conj(z)^l:`` at variance ``c`` (scalar or array input)."""
    if c < 0:
        raise ValueError(f"variance must be >= 0, got {c}")
    if k < 0 or l < 0:
        raise ValueError("indices must be non-negative")
    scalar = np.ndim(z) == 0
    out = kernels.wick_power(np.atleast_1d(np.asarray(z, dtype=complex)), float(c), int(k), int(l))
    return complex(out[0]) if scalar else out


def family_indices(m: int) -> list[tuple[int, int]]:
    """Stored index pairs: ``0 <= j <= i``, ``i <= m+1``, ``j <= m``, ``i+j >= 1``."""
    return [(i, j) for i in range(m + 2) for j in range(min(i, m) + 1) if i + j >= 1]


@dataclass(frozen=True, eq=False)
class WickFamily:
    """Wick powers ``Z^{:i,j:}`` of one field at one renormalization constant.

    Physical-grid values are exact for the band-limited field; spectral
    (truncated) forms are computed on first request and cached.  Pairs with
    ``i < j`` are served through the conjugation identity.
    """

    Z: SpectralField
    c: float
    m: int
    _phys: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def grid(self) -> GridSpec:
        return self.Z.grid

    def z_physical(self) -> np.ndarray:
        if self._phys is None:
            object.__setattr__(self, "_phys", self.Z.to_physical())
        return self._phys

    def indices(self) -> list[tuple[int, int]]:
        return family_indices(self.m)

    def physical(self, i: int, j: int) -> np.ndarray:
        """``Z^{:i,j:}`` sampled on the padded grid."""
        if i == 0 and j == 0:
            return np.ones_like(self.z_physical())
        key = ("phys", i, j)
        if key not in self._cache:
            if i < j:
                self._cache[key] = np.conj(self.physical(j, i))
            else:
                self._cache[key] = kernels.wick_power(self.z_physical(), self.c, i, j)
        return self._cache[key]

    def power(self, i: int, j: int) -> SpectralField:
        """``Z^{:i,j:}`` truncated back to the retained modes."""
        if (i, j) == (1, 0):
            return self.Z
        if i == 0 and j == 0:
            return SpectralField(self.grid, np.broadcast_to(
                SpectralField.constant(self.grid).coeffs, self.Z.coeffs.shape).copy())
        if i < j:
            return self.power(j, i).conj()
        if i > self.m + 1 or j > self.m:
            raise KeyError(f"({i}, {j}) outside the family for m={self.m}")
        key = ("spec", i, j)
        if key not in self._cache:
            self.grid.check_degree(i + j)
            self._cache[key] = SpectralField.from_physical(self.grid, self.physical(i, j))
        return self._cache[key]

    @property
    def powers(self) -> dict[tuple[int, int], SpectralField]:
        return {ij: self.power(*ij) for ij in self.indices()}


def wick_family(state: OUState, m: int, c: float | None = None) -> WickFamily:
    """Wick powers of ``state.Z`` with ``c`` defaulting to the state's own variance."""
    if c is None:
        c = state_wick_constant(state)
    return WickFamily(Z=state.Z, c=float(c), m=m, _phys=state.physical())


def shift_powers_physical(stationary_s: WickFamily, fresh_t: WickFamily, delta: float, mu: float,
                          k: int, l: int) -> np.ndarray:
    """``sum C(k,i) C(l,j) (-1)^(i+j) V^i conj(V)^j Z_t^{:k-i,l-j:}`` with ``V = P_delta Z_s``."""
    V = SpectralField(stationary_s.grid, semigroup(stationary_s.grid, delta, mu) * stationary_s.Z.coeffs)
    Vp = V.to_physical()
    out = np.zeros_like(Vp)
    for i in range(k + 1):
        for j in range(l + 1):
            term = comb(k, i) * comb(l, j) * (-1) ** (i + j)
            out += term * Vp**i * np.conj(Vp) ** j * fresh_t.physical(k - i, l - j)
    return out


def shift_wick_family(stationary: WickFamily, delta: float, fresh: WickFamily, mu: float) -> WickFamily:
    """Wick family of ``Z_{s,s+delta}`` built from stationary families at ``s`` and ``s+delta``.

    Both families must come from one noise realisation and carry the same
    (stationary) constant.  The result's physical values are the binomial
    combination; by the Appell property they coincide with
    ``H_{k,l}(Z_{s,t}; c_stat)``, and that is how the returned family stores
    them.
    """
    if stationary.grid != fresh.grid:
        raise ValueError("grid mismatch between families")
    if stationary.m != fresh.m:
        raise ValueError("families built for different m")
    V = semigroup(stationary.grid, delta, mu) * stationary.Z.coeffs
    Z_st = SpectralField(fresh.grid, fresh.Z.coeffs - V)
    fam = WickFamily(Z=Z_st, c=fresh.c, m=fresh.m)
    for i, j in fam.indices():
        fam._cache[("phys", i, j)] = shift_powers_physical(stationary, fresh, delta, mu, i, j)
    return fam


def change_constant_physical(fam: WickFamily, c_new: float, k: int, l: int) -> np.ndarray:
    """``H_{k,l}(Z; c_new)`` from the family at ``c``: ``sum_r (-1)^r r! C(k,r) C(l,r) (c_new-c)^r H_{k-r,l-r}(Z; c)``."""
    dc = c_new - fam.c
    out = np.zeros_like(fam.z_physical())
    for r in range(min(k, l) + 1):
        out += (-1) ** r * factorial(r) * comb(k, r) * comb(l, r) * dc**r * fam.physical(k - r, l - r)
    return out


# -- covariance oracle --------------------------------------------------------

ORACLE_MAX_ORDER = 4
ORACLE_MAX_N = 4


def chaos_covariance_oracle(k: int, l: int, omega, grid: GridSpec, mu: float,
                            lag: float | None = None, check_size: bool = True) -> complex | float:
    """Exact truncated ``E[Zhat^{:k,l:}_t(omega) conj(Zhat^{:k,l:}_s(omega))]``.

    Sums ``k! l! prod_i g_i(j_i)`` over all tuples with
    ``j_1+...+j_k - j_{k+1} - ... - j_{k+l} = omega`` and every ``|j_i|_inf <= N``,
    where ``g(j) = 1/(2 rho_j)`` (times ``exp(-rho_j|t-s| - i a_i theta_j (t-s))``
    when ``lag = t - s`` is given).  The enumeration is carried out by direct
    (non-FFT) discrete convolution, so its cost grows like
    ``(2N+1)^(2(k+l-1))``; sizes beyond ``k+l <= 4``, ``N <= 4`` are refused
    unless ``check_size`` is off.
    """
    if k < 0 or l < 0 or k + l == 0:
        raise ValueError("need k + l >= 1")
    if check_size and (k + l > ORACLE_MAX_ORDER or grid.N > ORACLE_MAX_N):
        raise ValueError(f"oracle size guard: k+l={k + l}, N={grid.N} (limits {ORACLE_MAX_ORDER}, {ORACLE_MAX_N})")
    N = grid.N
    r = rho_grid(grid, mu)
    base = 1.0 / (2.0 * r)
    if lag is None:
        g_plus = g_minus = base.astype(complex)
    else:
        th = theta_grid(grid)
        g_plus = base * np.exp(-r * abs(lag) - 1j * th * lag)
        g_minus = base * np.exp(-r * abs(lag) + 1j * th * lag)
    # j enters with a minus sign for the conjugated factors: reflect the array.
    factors = [g_plus] * k + [g_minus[::-1, ::-1]] * l
    acc = factors[0]
    for f in factors[1:]:
        acc = convolve2d(acc, f, mode="full")
    centre = (acc.shape[0] - 1) // 2
    w1, w2 = int(omega[0]), int(omega[1])
    # entry index = sum of signed offsets; offset 0 of the n-fold sum sits at `centre`
    i1, i2 = centre + w1, centre + w2
    if not (0 <= i1 < acc.shape[0] and 0 <= i2 < acc.shape[1]):
        val = 0.0
    else:
        val = acc[i1, i2]
    val = factorial(k) * factorial(l) * val
    if lag is None:
        return float(np.real(val))
    return complex(val)


def chaos_covariance_spectrum(k: int, l: int, grid: GridSpec, mu: float) -> np.ndarray:
    """Oracle values for every ``|omega|_inf <= N`` on the coefficient layout."""
    out = np.empty(grid.shape)
    for a, w1 in enumerate(grid.wavenumbers):
        for b, w2 in enumerate(grid.wavenumbers):
            out[a, b] = chaos_covariance_oracle(k, l, (w1, w2), grid, mu, check_size=False)
    return out
