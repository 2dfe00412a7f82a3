"""Littlewood-Paley blocks and Besov norms on the discrete torus.

The partition is fixed concretely so block values are reproducible:

    h(r) = exp(-1/(1-r^2)) on (-1, 1), s(r) = int_{-1}^r h / int_{-1}^1 h,
    chi_{-1}(x) = 1 - s(2 (|x| - 3/4) / (4/3 - 3/4) - 1),
    chi_0(x) = chi_{-1}(x/2) - chi_{-1}(x),  chi_j(x) = chi_0(x / 2^j).

``s`` is evaluated with 64-point Gauss-Legendre quadrature.  Summing the
blocks telescopes to ``chi_{-1}(x / 2^{J+1})``, which is 1 on the retained
lattice once ``2^{J+1} * 3/4 >= sqrt(2) N``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral import GridSpec, SpectralField, semigroup

R_INNER = 0.75
R_OUTER = 4.0 / 3.0
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _bump(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def _bump_integral(a: float, b: float) -> float:
    if b <= a:
        return 0.0
    half = 0.5 * (b - a)
    x = half * _GL_NODES + 0.5 * (a + b)
    return float(half * np.dot(_GL_WEIGHTS, _bump(x)))


_BUMP_TOTAL = _bump_integral(-1.0, 1.0)


@lru_cache(maxsize=4096)
def _smooth_step_scalar(r: float) -> float:
    if r <= -1.0:
        return 0.0
    if r >= 1.0:
        return 1.0
    # integrate the shorter tail so s(r) + s(-r) = 1 and 0 <= s <= 1 hold exactly
    if r > 0.0:
        return 1.0 - _bump_integral(r, 1.0) / _BUMP_TOTAL
    return _bump_integral(-1.0, r) / _BUMP_TOTAL


def smooth_step(r) -> np.ndarray:
    """``s(r)``: 0 for ``r <= -1``, 1 for ``r >= 1``, smooth in between."""
    r = np.asarray(r, dtype=float)
    flat = np.array([_smooth_step_scalar(float(x)) for x in r.ravel()])
    return flat.reshape(r.shape)


def chi_low(x) -> np.ndarray:
    """``chi_{-1}`` as a function of ``|x|``."""
    x = np.abs(np.asarray(x, dtype=float))
    out = 1.0 - smooth_step(2.0 * (x - R_INNER) / (R_OUTER - R_INNER) - 1.0)
    out = np.where(x <= R_INNER, 1.0, out)
    return np.where(x >= R_OUTER, 0.0, out)


def chi_block(x, j: int) -> np.ndarray:
    """``chi_j(|x|)`` for ``j >= -1``."""
    if j < -1:
        raise ValueError(f"block index must be >= -1, got {j}")
    if j == -1:
        return chi_low(x)
    x = np.asarray(x, dtype=float) / 2.0**j
    return chi_low(x / 2.0) - chi_low(x)


def max_block(N: int) -> int:
    return math.ceil(math.log2(max(math.sqrt(2.0) * N, 1.0))) + 1


@dataclass(frozen=True, eq=False)
class DyadicPartition:
    """Block weights ``chi_j(k)`` for ``j = -1..J_max`` on the coefficient layout."""

    N: int
    weights: np.ndarray  # shape (J_max + 2, 2N+1, 2N+1); row 0 is j = -1

    @property
    def j_max(self) -> int:
        return self.weights.shape[0] - 2

    @property
    def blocks(self) -> range:
        return range(-1, self.j_max + 1)

    def chi(self, j: int) -> np.ndarray:
        if not -1 <= j <= self.j_max:
            return np.zeros_like(self.weights[0])
        return self.weights[j + 1]


@lru_cache(maxsize=32)
def build_partition(N: int) -> DyadicPartition:
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N}")
    grid = GridSpec(N, 1)
    kabs = grid.k_abs
    J = max_block(N)
    w = np.stack([chi_block(kabs, j) for j in range(-1, J + 1)])
    w.setflags(write=False)
    return DyadicPartition(N=N, weights=w)


def _partition_for(f: SpectralField, part: DyadicPartition | None) -> DyadicPartition:
    if part is None:
        return build_partition(f.grid.N)
    if part.N != f.grid.N:
        raise ValueError(f"partition built for N={part.N}, field has N={f.grid.N}")
    return part


def lp_block(f: SpectralField, j: int, part: DyadicPartition | None = None) -> SpectralField:
    """The Littlewood-Paley block ``delta_j f``."""
    if j < -1:
        raise ValueError(f"block index must be >= -1, got {j}")
    part = _partition_for(f, part)
    return SpectralField(f.grid, f.coeffs * part.chi(j))


def lp_norm(values: np.ndarray, p: float) -> np.ndarray:
    """Grid-quadrature ``L^p`` norm over the last two axes (``p = inf`` is the grid max)."""
    a = np.abs(values)
    if math.isinf(p):
        return a.max(axis=(-2, -1))
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return np.mean(a**p, axis=(-2, -1)) ** (1.0 / p)


def block_norms(f: SpectralField, p: float = math.inf, part: DyadicPartition | None = None) -> np.ndarray:
    """``||delta_j f||_{L^p}`` for every block; block axis last."""
    part = _partition_for(f, part)
    blocks = f.coeffs[..., None, :, :] * part.weights
    phys = SpectralField(f.grid, blocks).to_physical()
    return lp_norm(phys, p)


def besov_norm(f: SpectralField, alpha: float, p: float = math.inf, q: float = math.inf,
               part: DyadicPartition | None = None) -> np.ndarray | float:
    """``(sum_j 2^{alpha j q} ||delta_j f||_{L^p}^q)^{1/q}``; ``p = q = inf`` gives ``C^alpha``."""
    if q < 1 or p < 1:
        raise ValueError("need p, q >= 1")
    part = _partition_for(f, part)
    norms = block_norms(f, p, part)
    j = np.arange(-1, part.j_max + 1, dtype=float)
    weighted = 2.0 ** (alpha * j) * norms
    if math.isinf(q):
        out = weighted.max(axis=-1)
    else:
        out = np.sum(weighted**q, axis=-1) ** (1.0 / q)
    return float(out) if np.ndim(out) == 0 else out


def holder_norm(f: SpectralField, alpha: float, part: DyadicPartition | None = None):
    return besov_norm(f, alpha, math.inf, math.inf, part)


def heat_smoothing_ratio(f: SpectralField, alpha: float, beta: float, t: float, mu: float,
                         part: DyadicPartition | None = None):
    """``||P_t f||_{C^beta} t^{(beta-alpha)/2} / ||f||_{C^alpha}``."""
    if beta < alpha:
        raise ValueError("need beta >= alpha")
    if not t > 0:
        raise ValueError("need t > 0")
    denom = holder_norm(f, alpha, part)
    if np.any(np.asarray(denom) == 0):
        raise ValueError("zero-norm input")
    Pf = f.multiply_symbol(semigroup(f.grid, t, mu))
    return holder_norm(Pf, beta, part) * t ** ((beta - alpha) / 2.0) / denom
