# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pointwise kernels; same contract as ``wickcgl._kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport pow

cnp.import_array()

BACKEND = "cython"

DEF MAXDEG = 32


cdef double _comb(int n, int k) noexcept nogil:
    cdef double r = 1.0
    cdef int i
    if k < 0 or k > n:
        return 0.0
    for i in range(k):
        r = r * (n - i) / (i + 1)
    return r


cdef void _hermite_coeffs(int k, int l, double c, double* out) noexcept nogil:
    # out[r] = (-1)^r r! C(k,r) C(l,r) c^r
    cdef int r
    cdef int rmax = k if k < l else l
    cdef double fact = 1.0
    for r in range(rmax + 1):
        if r > 0:
            fact = fact * r
        out[r] = (-1.0 if r % 2 else 1.0) * fact * _comb(k, r) * _comb(l, r) * pow(c, r)


cdef inline double complex _hermite_eval(double complex* zp, double complex* zb,
                                         int k, int l, double* coef) noexcept nogil:
    cdef int r
    cdef int rmax = k if k < l else l
    cdef double complex acc = 0
    for r in range(rmax + 1):
        acc = acc + coef[r] * zp[k - r] * zb[l - r]
    return acc


def _check(int k, int l):
    if k < 0 or l < 0 or k >= MAXDEG or l >= MAXDEG:
        raise ValueError(f"indices ({k}, {l}) outside supported range [0, {MAXDEG})")


def wick_power(z, double c, int k, int l):
    _check(k, l)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] zf = np.ascontiguousarray(z, dtype=np.complex128).ravel()
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty_like(zf)
    cdef Py_ssize_t i, n = zf.shape[0]
    cdef double coef[MAXDEG]
    cdef double complex zp[MAXDEG]
    cdef double complex zb[MAXDEG]
    cdef double complex zi, zc
    cdef int a
    _hermite_coeffs(k, l, c, coef)
    with nogil:
        for i in range(n):
            zi = zf[i]
            zc = zi.conjugate()
            zp[0] = 1
            zb[0] = 1
            for a in range(1, k + 1):
                zp[a] = zp[a - 1] * zi
            for a in range(1, l + 1):
                zb[a] = zb[a - 1] * zc
            out[i] = _hermite_eval(zp, zb, k, l, coef)
    return out.reshape(np.shape(z))


def wick_drift(u, double c, int m, nu, tau1):
    # H_{m+1,m}(u; c) = u * P(|u|^2) with P(s) = sum_r coef_r s^(m-r); Horner in s.
    _check(m + 1, m)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] uf = np.ascontiguousarray(u, dtype=np.complex128).ravel()
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty_like(uf)
    cdef Py_ssize_t i, n = uf.shape[0]
    cdef double coef[MAXDEG]
    cdef double complex cnu = nu
    cdef double complex ctau = tau1
    cdef double nr = cnu.real, ni = cnu.imag, tr = ctau.real, ti = ctau.imag
    cdef double x, y, s, p, gr, gi
    cdef int r
    _hermite_coeffs(m + 1, m, c, coef)
    with nogil:
        for i in range(n):
            x = uf[i].real
            y = uf[i].imag
            s = x * x + y * y
            p = coef[0]
            for r in range(1, m + 1):
                p = p * s + coef[r]
            gr = tr - nr * p
            gi = ti - ni * p
            out[i] = (x * gr - y * gi) + 1j * (x * gi + y * gr)
    return out.reshape(np.shape(u))


def wick_drift_increment(u, w, double c, int m, nu, tau1, double scale):
    _check(m + 1, m)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] uf = np.ascontiguousarray(u, dtype=np.complex128).ravel()
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] wf = np.ascontiguousarray(w, dtype=np.complex128).ravel()
    if uf.shape[0] != wf.shape[0]:
        raise ValueError("u and w must have the same size")
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty_like(uf)
    cdef Py_ssize_t idx, n = uf.shape[0]
    # coefs[(a*(m+1)+b)*MAXDEG + r] for H_{a,b}
    cdef double coefs[MAXDEG * 4 * MAXDEG]
    cdef double weights[MAXDEG * MAXDEG]
    cdef double complex up[MAXDEG]
    cdef double complex ub[MAXDEG]
    cdef double complex wp[MAXDEG]
    cdef double complex wb[MAXDEG]
    cdef double complex ui, uc, wi, wc, acc
    cdef double complex cnu = nu
    cdef double complex ctau = tau1
    cdef int a, b, i, j
    if (m + 2) * (m + 1) > 4 * MAXDEG:
        raise ValueError("m too large for compiled kernel")
    for a in range(m + 2):
        for b in range(m + 1):
            _hermite_coeffs(a, b, c, &coefs[(a * (m + 1) + b) * MAXDEG])
    for i in range(m + 2):
        for j in range(m + 1):
            if i == 0 and j == 0:
                weights[0] = 0.0
            else:
                weights[i * (m + 1) + j] = _comb(m + 1, i) * _comb(m, j) * pow(scale, i + j - 1)
    with nogil:
        for idx in range(n):
            ui = uf[idx]
            uc = ui.conjugate()
            wi = wf[idx]
            wc = wi.conjugate()
            up[0] = 1
            ub[0] = 1
            wp[0] = 1
            wb[0] = 1
            for a in range(1, m + 2):
                up[a] = up[a - 1] * ui
                wp[a] = wp[a - 1] * wi
            for a in range(1, m + 1):
                ub[a] = ub[a - 1] * uc
                wb[a] = wb[a - 1] * wc
            acc = 0
            for i in range(m + 2):
                for j in range(m + 1):
                    if (i == 0 and j == 0) or weights[i * (m + 1) + j] == 0.0:
                        continue
                    acc = acc + weights[i * (m + 1) + j] * wp[i] * wb[j] * _hermite_eval(
                        up, ub, m + 1 - i, m - j, &coefs[((m + 1 - i) * (m + 1) + (m - j)) * MAXDEG])
            out[idx] = -cnu * acc + ctau * wi
    return out.reshape(np.shape(u))
