"""Pure-numpy pointwise kernels (fallback for the compiled ``_kernels`` module).

All functions take complex128 arrays of any shape and return new arrays of
the same shape.  ``H_{k,l}(z; c)`` below is the complex Hermite polynomial

    H_{k,l}(z; c) = sum_r (-1)^r r! C(k,r) C(l,r) c^r z^(k-r) conj(z)^(l-r),

the Wick power ``:z^k conj(z)^l:`` of a centred complex Gaussian with
``E|z|^2 = c``.
"""
from __future__ import annotations

from math import comb, factorial

import numpy as np

BACKEND = "python"


def hermite_coefficients(k: int, l: int, c: float) -> list[tuple[int, int, float]]:
    """Terms ``(a, b, coeff)`` with ``H_{k,l} = sum coeff z^a conj(z)^b``."""
    return [
        (k - r, l - r, (-1) ** r * factorial(r) * comb(k, r) * comb(l, r) * c**r)
        for r in range(min(k, l) + 1)
    ]


def _powers(z: np.ndarray, top: int) -> list[np.ndarray]:
    out = [np.ones_like(z)]
    for _ in range(top):
        out.append(out[-1] * z)
    return out


def wick_power(z, c: float, k: int, l: int) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    zp = _powers(z, k)
    zb = _powers(np.conj(z), l)
    out = np.zeros_like(z)
    for a, b, coef in hermite_coefficients(k, l, c):
        out += coef * (zp[a] * zb[b])
    return out


def _hermite_table(u: np.ndarray, c: float, kmax: int, lmax: int) -> dict:
    up = _powers(u, kmax)
    ub = _powers(np.conj(u), lmax)
    table = {}
    for k in range(kmax + 1):
        for l in range(lmax + 1):
            acc = np.zeros_like(u)
            for a, b, coef in hermite_coefficients(k, l, c):
                acc += coef * (up[a] * ub[b])
            table[k, l] = acc
    return table


def wick_drift(u, c: float, m: int, nu: complex, tau1: complex) -> np.ndarray:
    """``-nu H_{m+1,m}(u; c) + tau1 * u``.

    Uses ``H_{m+1,m}(u; c) = u * P(|u|^2)`` with ``P`` evaluated by Horner.
    """
    u = np.asarray(u, dtype=complex)
    s = u.real * u.real + u.imag * u.imag
    coefs = [coef for _, _, coef in hermite_coefficients(m + 1, m, c)]
    p = np.full_like(s, coefs[0])
    for coef in coefs[1:]:
        p = p * s + coef
    return u * (tau1 - nu * p)


def wick_drift_increment(u, w, c: float, m: int, nu: complex, tau1: complex, scale: float) -> np.ndarray:
    """``(F(u + scale*w) - F(u)) / scale`` for ``F = wick_drift``, without cancellation.

    Expanded with the binomial (Appell) identity for ``H``; terms of order
    ``w^i conj(w)^j`` carry ``scale**(i+j-1)``, which may underflow to zero.
    """
    u = np.asarray(u, dtype=complex)
    w = np.asarray(w, dtype=complex)
    table = _hermite_table(u, c, m + 1, m)
    wp = _powers(w, m + 1)
    wb = _powers(np.conj(w), m)
    acc = np.zeros_like(u)
    for i in range(m + 2):
        for j in range(m + 1):
            if i == 0 and j == 0:
                continue
            weight = comb(m + 1, i) * comb(m, j) * scale ** (i + j - 1)
            if weight == 0.0:
                continue
            acc += weight * (wp[i] * wb[j]) * table[m + 1 - i, m - j]
    return -nu * acc + tau1 * w
