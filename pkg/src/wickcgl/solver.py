"""Remainder dynamics ``u = v + Z`` for the renormalized equation.

With ``Z = Z_{0,t}`` the zero-start Gaussian chain, the remainder solves

    dv/dt = A v + Psi(v, Z),
    Psi = -nu sum_{i,j} C(m+1,i) C(m,j) v^i conj(v)^j Z^{:m+1-i,m-j:} + (tau+1)(v+Z),

with ``A = (i+mu) Laplacian - 1``.  By the Appell property the double sum is
``H_{m+1,m}(v + Z; c)``, so ``Psi`` is one polynomial in ``u`` evaluated
pointwise on the padded grid.  Time stepping is the exponential (phi_1)
Euler scheme; the Gaussian part is advanced exactly.

The renormalization constant ``c`` is chosen by ``renorm``:

``"stationary"``  the variance of the stationary field, ``sum 1/(2 rho_k)``;
                  this is what the binomial shift construction from stationary
                  Wick powers yields.
``"time"``        the zero-start chain's own variance ``c_N(t)``.
``"none"``        ``c = 0``, i.e. the naive drift ``-nu |u|^{2m} u``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from math import comb

import numpy as np

from . import kernels
from .besov import holder_norm
from .noise import NoiseStream, OUState, draw_increment, evolve_with, zero_start
from .spectral import (GridSpec, ModelParams, SpectralField, coeffs_to_physical, gradient_physical,
                       grid_mean, phi1_weight, physical_to_coeffs, rho_grid, semigroup)
from .wick import WickFamily, wick_constant

BLOWUP_L2 = 1e8
RENORM_MODES = ("stationary", "time", "none")


class BlowUpError(RuntimeError):
    """The remainder left the finite range; carries where and how."""

    def __init__(self, t: float, norm, members):
        self.t = float(t)
        self.norm = np.asarray(norm)
        self.members = list(members)
        super().__init__(f"blow-up at t={self.t:.6g}: ||v||_L2 max {np.nanmax(self.norm):.3e}, members {self.members}")


class HorizonTooLargeError(RuntimeError):
    """Picard iteration did not contract on the requested horizon."""


def renorm_constant(noise: OUState | None, mode: str) -> float:
    if mode not in RENORM_MODES:
        raise ValueError(f"unknown renormalization {mode!r}")
    if noise is None or mode == "none":
        return 0.0
    if mode == "stationary":
        return wick_constant(noise.grid, noise.mu)
    return wick_constant(noise.grid, noise.mu, noise.variance())


@dataclass(frozen=True, eq=False)
class SolverState:
    """Snapshot of one trajectory (or a batch of them along leading axes).

    ``noise`` is ``None`` for the deterministic equation (``Z = 0``).
    """

    t: float
    v: SpectralField
    noise: OUState | None
    params: ModelParams
    rng: NoiseStream | None
    renorm: str = "stationary"

    def __post_init__(self):
        if self.renorm not in RENORM_MODES:
            raise ValueError(f"unknown renormalization {self.renorm!r}")
        if self.noise is not None and self.noise.grid != self.v.grid:
            raise ValueError("noise and remainder live on different grids")

    @property
    def grid(self) -> GridSpec:
        return self.v.grid

    @property
    def c(self) -> float:
        return renorm_constant(self.noise, self.renorm)

    @property
    def wick(self) -> WickFamily:
        """Wick family of the current noise (rebuilt from ``noise`` on access)."""
        if self.noise is None:
            Z = SpectralField.zeros(self.grid, self.v.batch_shape)
            return WickFamily(Z=Z, c=0.0, m=self.params.m)
        return WickFamily(Z=self.noise.Z, c=self.c, m=self.params.m, _phys=self.noise.physical())

    @property
    def u(self) -> SpectralField:
        return self.v if self.noise is None else self.v + self.noise.Z

    def z_physical(self) -> np.ndarray | None:
        return None if self.noise is None else self.noise.physical()


def initial_state(params: ModelParams, grid: GridSpec, u0: SpectralField, rng: NoiseStream | None,
                  renorm: str = "stationary", t0: float = 0.0) -> SolverState:
    """State at ``t0`` with ``Z_{t0,t0} = 0`` so that ``v = u0``; ``rng=None`` switches noise off."""
    if u0.grid != grid:
        raise ValueError("initial data on a different grid")
    noise = None if rng is None else zero_start(grid, params.mu, t0, u0.batch_shape)
    return SolverState(t=t0, v=u0, noise=noise, params=params, rng=rng, renorm=renorm)


# -- drift --------------------------------------------------------------------


def drift_physical(u: np.ndarray, c: float, params: ModelParams) -> np.ndarray:
    """``-nu H_{m+1,m}(u; c) + (tau+1) u`` pointwise."""
    return kernels.wick_drift(u, c, params.m, complex(params.nu), complex(params.tau) + 1.0)


def psi(v: SpectralField, wick: WickFamily, params: ModelParams) -> SpectralField:
    """The renormalized drift, evaluated pointwise in ``u = v + Z`` and truncated once."""
    v.grid.check_degree(2 * params.m + 1)
    if wick.m != params.m:
        raise ValueError(f"Wick family built for m={wick.m}, model has m={params.m}")
    u = v.to_physical() + wick.z_physical()
    return SpectralField.from_physical(v.grid, drift_physical(u, wick.c, params))


def psi_expanded(v: SpectralField, wick: WickFamily, params: ModelParams,
                 truncate_powers: bool = False) -> SpectralField:
    """The renormalized drift as the literal binomial sum over Wick powers.

    With ``truncate_powers`` each ``Z^{:a,b:}`` is first truncated to the
    retained modes before multiplying by ``v^i conj(v)^j``; that product has
    ``2m+2`` band-limited factors and needs ``pad >= m+2`` to stay alias-free.
    """
    m = params.m
    if wick.m != m:
        raise ValueError(f"Wick family built for m={wick.m}, model has m={m}")
    v.grid.check_degree(2 * m + 2 if truncate_powers else 2 * m + 1)
    vp = v.to_physical()
    vb = np.conj(vp)
    acc = np.zeros_like(vp)
    for i in range(m + 2):
        for j in range(m + 1):
            a, b = m + 1 - i, m - j
            if truncate_powers:
                zab = wick.power(a, b).to_physical() if a + b else np.ones_like(vp)
            else:
                zab = wick.physical(a, b)
            acc += comb(m + 1, i) * comb(m, j) * vp**i * vb**j * zab
    out = -complex(params.nu) * acc + (complex(params.tau) + 1.0) * (vp + wick.z_physical())
    return SpectralField.from_physical(v.grid, out)


# -- exponential Euler ----------------------------------------------------------


def _check_finite(t: float, v: np.ndarray) -> None:
    norm = np.sqrt(np.sum(np.abs(v) ** 2, axis=(-2, -1)))
    bad = ~np.isfinite(norm) | (norm > BLOWUP_L2)
    if np.any(bad):
        members = [int(i) for i in np.flatnonzero(np.atleast_1d(bad))]
        raise BlowUpError(t, norm, members)


def _advance_noise(state: SolverState, delta: float, eta: np.ndarray | None):
    if state.noise is None:
        return None, state.rng
    rng = state.rng
    if eta is None:
        eta = draw_increment(state.grid, state.params.mu, delta, rng)
        rng = rng.advance()
    return evolve_with(state.noise, delta, eta), rng


def _u_physical(state: SolverState) -> np.ndarray:
    # one transform of v + Z; the physical Z is only needed for the Wick family
    coeffs = state.v.coeffs if state.noise is None else state.v.coeffs + state.noise.Z.coeffs
    return coeffs_to_physical(coeffs, state.grid)


def _advance(state: SolverState, delta: float, drift_hat: np.ndarray, eta: np.ndarray | None) -> SolverState:
    grid, mu = state.grid, state.params.mu
    v_new = semigroup(grid, delta, mu) * state.v.coeffs + phi1_weight(grid, delta, mu) * drift_hat
    t_new = state.t + delta
    _check_finite(t_new, v_new)
    noise, rng = _advance_noise(state, delta, eta)
    return replace(state, t=t_new, v=SpectralField(grid, v_new), noise=noise, rng=rng)


def step_exponential_euler(state: SolverState, delta: float, eta: np.ndarray | None = None,
                           linear_drift: bool = False) -> SolverState:
    """One step ``v <- P_delta v + phi_1(delta) Psi(v, Z)`` followed by the exact noise update.

    ``eta`` overrides the noise innovation (the stream is then not
    advanced); ``linear_drift`` replaces ``Psi`` by ``(tau+1) v`` for
    testing the integrator against closed-form scalar dynamics.
    """
    if not delta > 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    params = state.params
    if linear_drift:
        drift_hat = (complex(params.tau) + 1.0) * state.v.coeffs
    else:
        state.grid.check_degree(2 * params.m + 1)
        drift_hat = physical_to_coeffs(drift_physical(_u_physical(state), state.c, params), state.grid)
    return _advance(state, delta, drift_hat, eta)


def integrate(state: SolverState, delta: float, n_steps: int, observer=None, every: int = 1) -> SolverState:
    """Advance ``n_steps``; ``observer(state, step_index)`` is called on the start state and every ``every`` steps."""
    if observer is not None:
        observer(state, 0)
    for n in range(1, n_steps + 1):
        state = step_exponential_euler(state, delta)
        if observer is not None and n % every == 0:
            observer(state, n)
    return state


# -- Picard iteration -----------------------------------------------------------


@dataclass(frozen=True)
class PicardResult:
    times: np.ndarray
    trajectory: np.ndarray  # (K+1,) + coefficient shape
    iterations: int
    increments: list


def picard_local(u0: SpectralField, horizon: float, tol: float, max_iter: int,
                 noise_path: list, params: ModelParams, renorm: str = "stationary",
                 beta: float = 0.2, gamma: float = 0.25) -> PicardResult:
    """Fixed point of the discrete mild map on ``[0, horizon]``.

    ``noise_path`` lists ``K+1`` noise states (or ``None`` for ``Z = 0``) on a
    uniform sub-grid.  The map is

        (M v)(t_k) = P_{t_k} u0 + sum_{i<k} P_{t_k - t_{i+1}} phi_1(dt) Psi(v(t_i), Z(t_i)),

    whose fixed point is the exponential Euler trajectory.  Iterates are
    compared in ``sup_k t_k^gamma ||.||_{C^beta}``.  Growing or non-finite
    increments, or no convergence within ``max_iter``, mean the horizon is too
    large for contraction.
    """
    K = len(noise_path) - 1
    if K < 1:
        raise ValueError("noise path needs at least two points")
    if not horizon > 0:
        raise ValueError("horizon must be > 0")
    grid, mu = u0.grid, params.mu
    dt = horizon / K
    times = np.linspace(0.0, horizon, K + 1)
    E = semigroup(grid, dt, mu)
    w = phi1_weight(grid, dt, mu)
    zs = [None if z is None else z.physical() for z in noise_path[:-1]]
    cs = [renorm_constant(z, renorm) for z in noise_path[:-1]]

    traj = np.empty((K + 1,) + u0.coeffs.shape, dtype=complex)
    traj[0] = u0.coeffs
    for k in range(1, K + 1):
        traj[k] = E * traj[k - 1]
    weights = times**gamma
    increments = []
    grid.check_degree(2 * params.m + 1)
    for it in range(1, max_iter + 1):
        phys = coeffs_to_physical(traj[:-1], grid)
        drift = np.empty_like(traj[:-1])
        for k in range(K):
            u = phys[k] if zs[k] is None else phys[k] + zs[k]
            drift[k] = physical_to_coeffs(drift_physical(u, cs[k], params), grid)
        new = np.empty_like(traj)
        new[0] = u0.coeffs
        for k in range(1, K + 1):
            new[k] = E * new[k - 1] + w * drift[k - 1]
        diff = SpectralField(grid, new - traj)
        norms = np.asarray(holder_norm(diff, beta))
        inc = float(np.max(weights.reshape((-1,) + (1,) * (norms.ndim - 1)) * norms))
        increments.append(inc)
        traj = new
        if not math.isfinite(inc) or not np.all(np.isfinite(new)):
            raise HorizonTooLargeError(f"non-finite iterate after {it} iterations on horizon {horizon}")
        if inc < tol:
            return PicardResult(times, traj, it, increments)
        if it >= 3 and increments[-1] > increments[-2] > increments[-3]:
            raise HorizonTooLargeError(f"iterates diverge on horizon {horizon} (increments {increments[-3:]})")
    raise HorizonTooLargeError(f"no convergence within {max_iter} iterations on horizon {horizon}")


def contraction_horizon(u0: SpectralField, params: ModelParams, dt: float, tol: float, max_iter: int,
                        horizons, noise_factory=None, renorm: str = "stationary") -> float:
    """Largest horizon in ``horizons`` (ascending) on which :func:`picard_local` converges.

    ``noise_factory(K)`` returns a noise path of ``K+1`` states; ``None`` means ``Z = 0``.
    """
    best = 0.0
    for h in horizons:
        K = max(1, int(round(h / dt)))
        path = [None] * (K + 1) if noise_factory is None else noise_factory(K)
        try:
            picard_local(u0, h, tol, max_iter, path, params, renorm)
        except HorizonTooLargeError:
            break
        best = h
    return best


# -- energy identity --------------------------------------------------------------


@dataclass(frozen=True)
class EnergyReport:
    """Terms of ``d/dt ||v||_{2p}^{2p} / (2p) = -gradient - mass - dissipation + forcing``."""

    p: int
    lhs_rate: np.ndarray | float | None
    gradient: np.ndarray | float
    mass: np.ndarray | float
    dissipation: np.ndarray | float
    forcing: np.ndarray | float

    @property
    def rhs(self):
        return -self.gradient - self.mass - self.dissipation + self.forcing

    @property
    def residual(self):
        if self.lhs_rate is None:
            raise ValueError("no lhs rate: build the report with the next state")
        return self.lhs_rate - self.rhs

    def terms(self) -> dict:
        return {"gradient": self.gradient, "mass": self.mass, "dissipation": self.dissipation,
                "forcing": self.forcing}


ENERGY_MAX_P = 8


def quadratic_form(v: SpectralField, p: int, mu: float):
    """``(G, W)`` with ``G = Re[(i+mu) <grad((v conj v)^{p-1} conj v), grad v>]`` and ``W = int |grad v|^2 |v|^{2p-2}``.

    Expanded, ``G = Re{(i+mu) int [p |v|^{2p-2} |grad v|^2 + (p-1) |v|^{2p-4} conj(v)^2 (grad v . grad v)]}``.
    """
    vp = v.to_physical()
    d1, d2 = gradient_physical(v)
    a2 = np.abs(vp) ** 2
    g2 = np.abs(d1) ** 2 + np.abs(d2) ** 2
    W = grid_mean(a2 ** (p - 1) * g2)
    if p == 1:
        inner = g2
    else:
        inner = p * a2 ** (p - 1) * g2 + (p - 1) * a2 ** (p - 2) * np.conj(vp) ** 2 * (d1 * d1 + d2 * d2)
    G = np.real((1j + mu) * grid_mean(inner))
    return G, np.real(W)


def _lp_power(v: SpectralField, p: int) -> np.ndarray:
    return grid_mean(np.abs(v.to_physical()) ** (2 * p))


def energy_report(state: SolverState, p: int, next_state: SolverState | None = None) -> EnergyReport:
    """Evaluate the energy balance of ``||v||_{L^{2p}}^{2p}`` at ``state``.

    ``lhs_rate`` is the forward difference to ``next_state`` when given.
    """
    if not 1 <= p <= ENERGY_MAX_P:
        raise ValueError(f"p must lie in [1, {ENERGY_MAX_P}], got {p}")
    params, grid = state.params, state.grid
    m = params.m
    # grid means of degree-d products of band-limited factors are exact when n > d N
    deg = 2 * p + 2 * m
    if grid.n <= deg * grid.N:
        raise ValueError(f"grid n={grid.n} too coarse for exact quadrature of degree {deg} (need n > {deg * grid.N})")
    v = state.v
    vp = v.to_physical()
    a2 = np.abs(vp) ** 2
    G, _ = quadratic_form(v, p, params.mu)
    mass = grid_mean(a2**p)
    diss = complex(params.nu).real * grid_mean(a2 ** (p + m))
    Psi = psi(v, state.wick, params).to_physical()
    psi_prime = Psi + complex(params.nu) * a2**m * vp
    forcing = grid_mean(a2 ** (p - 1) * np.real(np.conj(vp) * psi_prime))
    lhs = None
    if next_state is not None:
        dt = next_state.t - state.t
        lhs = (_lp_power(next_state.v, p) - mass) / (2 * p * dt)
    return EnergyReport(p=p, lhs_rate=lhs, gradient=G, mass=mass, dissipation=diss, forcing=forcing)


def dissipation_delta(p: int, mu: float) -> float:
    """Largest ``delta`` with ``(p-1) / (mu (mu + sqrt(1+mu^2))) <= 1 - delta``."""
    return 1.0 - (p - 1) / (mu * (mu + math.sqrt(1.0 + mu * mu)))


# -- nudged pair ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CoupledState:
    """Two copies driven by one noise path; the second is nudged by ``lam (v - v~)``.

    The difference ``w = v~ - v`` is stored as ``exp(log_scale) * w_hat`` with
    ``||w_hat||_{L^2} = 1`` (or ``w_hat = 0``), so exponential decay over
    long horizons neither underflows nor loses relative accuracy.
    """

    base: SolverState
    w_hat: SpectralField
    log_scale: np.ndarray
    lam: float

    @property
    def t(self) -> float:
        return self.base.t

    @property
    def second(self) -> SpectralField:
        """The nudged copy ``v~ = v + w``."""
        return self.base.v + self.w

    @property
    def w(self) -> SpectralField:
        return SpectralField(self.w_hat.grid, self.w_hat.coeffs * np.exp(self.log_scale)[..., None, None])

    def log_w_l2_squared(self) -> np.ndarray:
        n2 = self.w_hat.l2_squared()
        with np.errstate(divide="ignore"):
            return 2.0 * self.log_scale + np.log(n2)


def _normalize(w: np.ndarray, log_scale: np.ndarray):
    n = np.sqrt(np.sum(np.abs(w) ** 2, axis=(-2, -1)))
    safe = np.where(n > 0, n, 1.0)
    return w / safe[..., None, None], log_scale + np.log(safe)


def coupled_state(base: SolverState, second_v: SpectralField, lam: float) -> CoupledState:
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    w0 = second_v.coeffs - base.v.coeffs
    w_hat, s = _normalize(w0, np.zeros(base.v.batch_shape))
    return CoupledState(base=base, w_hat=SpectralField(base.grid, w_hat), log_scale=s, lam=float(lam))


def step_coupled(cs: CoupledState, delta: float, eta: np.ndarray | None = None) -> CoupledState:
    """Advance both copies by one exponential Euler step on the shared innovation.

    The difference obeys ``dw = (A - lam) w + Psi(v + w) - Psi(v)``; the
    ``-lam w`` part is propagated exactly and the drift difference is
    evaluated without cancellation by :func:`kernels.wick_drift_increment`.
    """
    if not delta > 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    base = cs.base
    grid, params = base.grid, base.params
    mu = params.mu
    grid.check_degree(2 * params.m + 1)
    u = _u_physical(base)
    c = base.c
    nu, tau1 = complex(params.nu), complex(params.tau) + 1.0
    wp = coeffs_to_physical(cs.w_hat.coeffs, grid)
    scale = np.exp(cs.log_scale)
    if np.ndim(scale) == 0:
        D = kernels.wick_drift_increment(u, wp, c, params.m, nu, tau1, float(scale))
    else:
        D = np.empty_like(u)
        for idx in np.ndindex(scale.shape):
            D[idx] = kernels.wick_drift_increment(u[idx], wp[idx], c, params.m, nu, tau1, float(scale[idx]))
    w_new = (semigroup(grid, delta, mu) * np.exp(-cs.lam * delta) * cs.w_hat.coeffs
             + phi1_weight(grid, delta, mu, shift=cs.lam) * physical_to_coeffs(D, grid))
    if not np.all(np.isfinite(w_new)):
        bad = ~np.isfinite(w_new).all(axis=(-2, -1))
        raise BlowUpError(base.t + delta, np.where(bad, np.inf, 0.0), np.flatnonzero(np.atleast_1d(bad)))
    w_hat, s = _normalize(w_new, cs.log_scale)
    new_base = _advance(base, delta, physical_to_coeffs(drift_physical(u, c, params), grid), eta)
    _check_finite(new_base.t, new_base.v.coeffs + w_hat * np.exp(s)[..., None, None])
    return CoupledState(base=new_base, w_hat=SpectralField(grid, w_hat), log_scale=s, lam=cs.lam)


def step_pair_direct(v: SolverState, v2: SolverState, lam: float, delta: float):
    """Reference two-copy step (no difference representation), for cross-checks.

    Both copies must carry the same noise and stream; the nudging is applied
    as part of the drift of the second copy.
    """
    grid, params = v.grid, v.params
    mu = params.mu
    eta = draw_increment(grid, mu, delta, v.rng) if v.noise is not None else None
    first = step_exponential_euler(v, delta, eta=eta)
    u2 = v2.v.to_physical()
    zp = v2.z_physical()
    if zp is not None:
        u2 = u2 + zp
    drift = physical_to_coeffs(drift_physical(u2, v2.c, params), grid) + lam * (v.v.coeffs - v2.v.coeffs)
    new2 = semigroup(grid, delta, mu) * v2.v.coeffs + phi1_weight(grid, delta, mu) * drift
    noise2 = None if v2.noise is None else evolve_with(v2.noise, delta, eta)
    rng = first.rng.advance() if first.rng is not None else None
    first = replace(first, rng=rng)
    second = replace(v2, t=v2.t + delta, v=SpectralField(grid, new2), noise=noise2, rng=rng)
    return first, second


def stationary_variance(grid: GridSpec, mu: float) -> np.ndarray:
    return 1.0 / (2.0 * rho_grid(grid, mu))
