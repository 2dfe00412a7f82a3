"""Frequency-lattice bookkeeping and spectral transforms on the unit torus T^2.

Fields are stored as Fourier coefficients on the square cutoff
``|k|_inf <= N`` with the analysis convention

    u_hat(k) = int_{T^2} u(x) exp(-2 pi i k.x) dx,

so that ``u(x) = sum_k u_hat(k) exp(2 pi i k.x)``.  Coefficient arrays have
shape ``(..., 2N+1, 2N+1)``; entry ``[..., a, b]`` holds the mode
``k = (a - N, b - N)``.  Leading axes are batch axes (ensembles), and every
routine here broadcasts over them.

Physical samples live on a ``n x n`` grid with ``n = pad * (2N+1)`` points
``x = (i/n, j/n)``.  A pointwise polynomial of degree ``d`` in band-limited
fields is computed without aliasing on that grid whenever
``pad >= ceil((d+1)/2)``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

logger = logging.getLogger(__name__)

_FFT_WORKERS = 1


def set_fft_workers(workers: int) -> None:
    """Set the thread count used by every transform in the package."""
    global _FFT_WORKERS
    if workers < 1:
        raise ValueError("workers must be >= 1")
    _FFT_WORKERS = int(workers)


class InsufficientPaddingError(ValueError):
    """Raised when a product's degree exceeds what the grid padding resolves."""


@dataclass(frozen=True)
class GridSpec:
    """Square frequency cutoff ``N`` and dealiasing factor ``pad``."""

    N: int
    pad: int = 2

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 0:
            raise ValueError(f"N must be a non-negative integer, got {self.N!r}")
        if int(self.pad) != self.pad or self.pad < 1:
            raise ValueError(f"pad must be an integer >= 1, got {self.pad!r}")

    @property
    def size(self) -> int:
        """Number of retained modes per axis, 2N+1."""
        return 2 * self.N + 1

    @property
    def n(self) -> int:
        """Physical grid points per axis."""
        return self.pad * self.size

    @property
    def shape(self) -> tuple[int, int]:
        return (self.size, self.size)

    def max_alias_free_degree(self) -> int:
        return 2 * self.pad - 1

    def check_degree(self, degree: int) -> None:
        if self.pad < math.ceil((degree + 1) / 2):
            raise InsufficientPaddingError(
                f"degree-{degree} product needs pad >= {math.ceil((degree + 1) / 2)}, "
                f"grid has pad={self.pad}"
            )

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """1-D array ``[-N, ..., N]``."""
        return np.arange(-self.N, self.N + 1)

    @cached_property
    def k_squared(self) -> np.ndarray:
        """``|k|^2`` on the coefficient layout."""
        k = self.wavenumbers
        return (k[:, None] ** 2 + k[None, :] ** 2).astype(float)

    @cached_property
    def k_abs(self) -> np.ndarray:
        return np.sqrt(self.k_squared)

    @cached_property
    def k_inf(self) -> np.ndarray:
        k = np.abs(self.wavenumbers)
        return np.maximum(k[:, None], k[None, :])

    def index(self, k) -> tuple[int, int]:
        """Array index of lattice point ``k``; raises if outside the cutoff."""
        k1, k2 = int(k[0]), int(k[1])
        if max(abs(k1), abs(k2)) > self.N:
            raise IndexError(f"mode {k} outside cutoff N={self.N}")
        return (k1 + self.N, k2 + self.N)

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical coordinates ``(x1, x2)`` as ``n x n`` arrays."""
        x = np.arange(self.n) / self.n
        return np.meshgrid(x, x, indexing="ij")


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the equation and the nudging coefficient."""

    mu: float
    nu: complex = 1.0
    tau: complex = 0.0
    m: int = 1
    lam: float = 0.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        nu = complex(self.nu)
        # nu = 0 is the exactly solvable linear case
        if nu != 0 and not nu.real > 0:
            raise ValueError(f"Re(nu) must be > 0, got {self.nu}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be an integer >= 1, got {self.m}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")

    @property
    def is_linear(self) -> bool:
        return complex(self.nu) == 0


def rho(k, mu: float) -> np.ndarray | float:
    """Real part of the symbol of ``-A``: ``1 + 4 pi^2 mu |k|^2``.

    ``k`` is a lattice point ``(k1, k2)`` or an array whose last axis has
    length 2.
    """
    k = np.asarray(k, dtype=float)
    ksq = np.sum(k * k, axis=-1)
    out = 1.0 + 4.0 * math.pi**2 * mu * ksq
    return float(out) if np.ndim(out) == 0 else out


def theta(k) -> np.ndarray | float:
    """Imaginary part of the symbol of ``-A``: ``4 pi^2 |k|^2``."""
    k = np.asarray(k, dtype=float)
    out = 4.0 * math.pi**2 * np.sum(k * k, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def semigroup_multiplier(k, t: float, mu: float) -> complex | np.ndarray:
    """Fourier multiplier ``exp(-(rho_k + i theta_k) t)`` of ``P_t = e^{tA}``."""
    if t < 0:
        raise ValueError(f"semigroup time must be >= 0, got {t}")
    out = np.exp(-(np.asarray(rho(k, mu)) + 1j * np.asarray(theta(k))) * t)
    return complex(out) if np.ndim(out) == 0 else out


def rho_grid(grid: GridSpec, mu: float) -> np.ndarray:
    return 1.0 + 4.0 * math.pi**2 * mu * grid.k_squared


def theta_grid(grid: GridSpec) -> np.ndarray:
    return 4.0 * math.pi**2 * grid.k_squared


def symbol(grid: GridSpec, mu: float) -> np.ndarray:
    """``rho_k + i theta_k`` on the coefficient layout, i.e. the symbol of ``-A``."""
    return rho_grid(grid, mu) + 1j * theta_grid(grid)


def semigroup(grid: GridSpec, t: float, mu: float) -> np.ndarray:
    """Multiplier array of ``P_t`` on the coefficient layout."""
    if t < 0:
        raise ValueError(f"semigroup time must be >= 0, got {t}")
    return np.exp(-symbol(grid, mu) * t)


def phi1_weight(grid: GridSpec, delta: float, mu: float, shift: float = 0.0) -> np.ndarray:
    """``(1 - exp(-a delta)) / a`` with ``a = rho + i theta + shift``, i.e. ``int_0^delta e^{-a s} ds``."""
    a = symbol(grid, mu) + shift
    return -np.expm1(-a * delta) / a


# -- transforms ---------------------------------------------------------------


def _scatter(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Embed centred coefficients into an FFT-ordered ``n x n`` array."""
    N, n = grid.N, grid.n
    full = np.zeros(coeffs.shape[:-2] + (n, n), dtype=complex)
    full[..., : N + 1, : N + 1] = coeffs[..., N:, N:]
    full[..., : N + 1, n - N :] = coeffs[..., N:, :N]
    full[..., n - N :, : N + 1] = coeffs[..., :N, N:]
    full[..., n - N :, n - N :] = coeffs[..., :N, :N]
    return full


def _gather(full: np.ndarray, grid: GridSpec) -> np.ndarray:
    N, n = grid.N, grid.n
    out = np.empty(full.shape[:-2] + grid.shape, dtype=complex)
    out[..., N:, N:] = full[..., : N + 1, : N + 1]
    out[..., N:, :N] = full[..., : N + 1, n - N :]
    out[..., :N, N:] = full[..., n - N :, : N + 1]
    out[..., :N, :N] = full[..., n - N :, n - N :]
    return out


def coeffs_to_physical(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Evaluate ``sum_k c_k e^{2 pi i k.x}`` on the padded physical grid."""
    coeffs = np.asarray(coeffs)
    if coeffs.shape[-2:] != grid.shape:
        raise ValueError(f"coefficient shape {coeffs.shape[-2:]} does not match grid {grid.shape}")
    n = grid.n
    return scipy.fft.ifft2(_scatter(coeffs, grid), workers=_FFT_WORKERS) * (n * n)


def physical_to_coeffs(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Fourier coefficients of grid samples, truncated to ``|k|_inf <= N``."""
    values = np.asarray(values)
    if values.shape[-2:] != (grid.n, grid.n):
        raise ValueError(f"physical shape {values.shape[-2:]} does not match grid n={grid.n}")
    n = grid.n
    return _gather(scipy.fft.fft2(values, workers=_FFT_WORKERS), grid) / (n * n)


def conj_coeffs(coeffs: np.ndarray) -> np.ndarray:
    """Coefficients of the complex conjugate field: ``conj(c(-k))``."""
    return np.conj(coeffs[..., ::-1, ::-1])


@dataclass(frozen=True, eq=False)
class SpectralField:
    """A complex field on T^2 held as truncated Fourier coefficients.

    Instances are treated as immutable; arithmetic returns new fields.
    """

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape[-2:] != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape[-2:]} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: GridSpec, batch: tuple[int, ...] = ()) -> "SpectralField":
        return cls(grid, np.zeros(tuple(batch) + grid.shape, dtype=complex))

    @classmethod
    def constant(cls, grid: GridSpec, value: complex = 1.0) -> "SpectralField":
        c = np.zeros(grid.shape, dtype=complex)
        c[grid.N, grid.N] = value
        return cls(grid, c)

    @classmethod
    def mode(cls, grid: GridSpec, k, value: complex = 1.0) -> "SpectralField":
        c = np.zeros(grid.shape, dtype=complex)
        c[grid.index(k)] = value
        return cls(grid, c)

    @classmethod
    def from_physical(cls, grid: GridSpec, values: np.ndarray) -> "SpectralField":
        return cls(grid, physical_to_coeffs(values, grid))

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-2]

    def to_physical(self) -> np.ndarray:
        return coeffs_to_physical(self.coeffs, self.grid)

    def conj(self) -> "SpectralField":
        return SpectralField(self.grid, conj_coeffs(self.coeffs))

    def coefficient(self, k) -> np.ndarray:
        return self.coeffs[(...,) + self.grid.index(k)]

    def is_real(self, rtol: float = 1e-12) -> np.ndarray | bool:
        """True where ``u_hat(-k) == conj(u_hat(k))`` for every retained ``k``."""
        diff = np.abs(self.coeffs - conj_coeffs(self.coeffs)).max(axis=(-2, -1))
        scale = np.abs(self.coeffs).max(axis=(-2, -1))
        return diff <= rtol * np.maximum(scale, 1e-300)

    def l2_squared(self) -> np.ndarray:
        """``||u||_{L^2}^2 = sum_k |u_hat(k)|^2`` (Parseval)."""
        return np.sum(np.abs(self.coeffs) ** 2, axis=(-2, -1))

    def multiply_symbol(self, mult: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * mult)

    def __add__(self, other):
        if isinstance(other, SpectralField):
            _same_grid(self, other)
            return SpectralField(self.grid, self.coeffs + other.coeffs)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SpectralField):
            _same_grid(self, other)
            return SpectralField(self.grid, self.coeffs - other.coeffs)
        return NotImplemented

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralField):
            return NotImplemented
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


def _same_grid(a: SpectralField, b: SpectralField) -> None:
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")


def to_physical(f: SpectralField) -> np.ndarray:
    return f.to_physical()


def to_spectral(values: np.ndarray, grid: GridSpec) -> SpectralField:
    return SpectralField.from_physical(grid, values)


def dealiased_product(fs: list[SpectralField], conj_flags: list[bool] | None = None) -> SpectralField:
    """Truncation of the exact pointwise product ``prod_i f_i`` (or ``conj f_i``).

    The product is formed on the padded grid and transformed back; the grid
    must satisfy ``pad >= ceil((d+1)/2)`` for ``d = len(fs)`` or the routine
    refuses rather than return an aliased result.
    """
    if not fs:
        raise ValueError("need at least one factor")
    if conj_flags is None:
        conj_flags = [False] * len(fs)
    if len(conj_flags) != len(fs):
        raise ValueError("conj_flags must match fs in length")
    grid = fs[0].grid
    for f in fs[1:]:
        _same_grid(fs[0], f)
    grid.check_degree(len(fs))
    prod = None
    for f, flag in zip(fs, conj_flags):
        phys = f.to_physical()
        if flag:
            phys = np.conj(phys)
        prod = phys if prod is None else prod * phys
    return SpectralField.from_physical(grid, prod)


def gradient_physical(f: SpectralField) -> tuple[np.ndarray, np.ndarray]:
    """Spectral derivatives ``(d1 f, d2 f)`` sampled on the physical grid."""
    k = f.grid.wavenumbers
    d1 = coeffs_to_physical(f.coeffs * (2j * math.pi * k)[:, None], f.grid)
    d2 = coeffs_to_physical(f.coeffs * (2j * math.pi * k)[None, :], f.grid)
    return d1, d2


def grid_mean(values: np.ndarray) -> np.ndarray:
    """Uniform-grid quadrature of ``int_{T^2} f dx``."""
    return np.mean(values, axis=(-2, -1))
