"""Exact sampling of the stochastic heat equation with dispersion on Galerkin modes.

Each retained mode of ``dZ = A Z dt + dW`` is an independent complex
Ornstein-Uhlenbeck process.  Over a step ``delta`` the transition is exact:

    Z(t+delta, k) = exp(-(rho_k + i theta_k) delta) Z(t, k) + eta_k,
    eta_k ~ CN(0, (1 - exp(-2 rho_k delta)) / (2 rho_k)),

so no time-discretisation error enters through the noise.

Random numbers come from a counter-based Philox generator keyed by
``(seed, stream)``; the counter is positioned by ``(step, lane)`` so any draw
is a pure function of ``(seed, stream, step, lane, mode)``.  Ensemble
members use distinct streams.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .spectral import GridSpec, SpectralField, rho_grid, semigroup

# Counter lanes keep the draw families disjoint.
LANE_INCREMENT = 0
LANE_STATIONARY = 1
LANE_AUX = 2


@dataclass(frozen=True)
class NoiseStream:
    """Deterministic source of complex Gaussian fields.

    ``streams`` lists one stream id per ensemble member; ``step`` is the
    counter position consumed by the next increment draw.
    """

    seed: int
    streams: tuple[int, ...] = (0,)
    step: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")
        object.__setattr__(self, "streams", tuple(int(s) for s in self.streams))

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return (len(self.streams),) if len(self.streams) != 1 else ()

    def _generator(self, stream: int, step: int, lane: int) -> np.random.Generator:
        bitgen = np.random.Philox(key=np.array([self.seed, stream], dtype=np.uint64),
                                  counter=np.array([0, step, lane, 0], dtype=np.uint64))
        return np.random.Generator(bitgen)

    def standard_complex(self, grid: GridSpec, lane: int = LANE_INCREMENT, step: int | None = None) -> np.ndarray:
        """``CN(0, 1)`` draws on the coefficient layout for every stream.

        Real and imaginary parts are independent ``N(0, 1/2)``.
        """
        step = self.step if step is None else step
        shape = grid.shape
        out = np.empty((len(self.streams),) + shape, dtype=complex)
        for b, s in enumerate(self.streams):
            g = self._generator(s, step, lane)
            xy = g.standard_normal((2,) + shape)
            out[b] = (xy[0] + 1j * xy[1]) * np.sqrt(0.5)
        return out.reshape(self.batch_shape + shape)

    def advance(self, steps: int = 1) -> "NoiseStream":
        return replace(self, step=self.step + steps)

    def counters(self) -> dict:
        return {"seed": self.seed, "streams": list(self.streams), "step": self.step}


def complex_normal(rng: np.random.Generator, shape, variance=1.0) -> np.ndarray:
    """``CN(0, variance)`` samples from an ordinary numpy generator."""
    xy = rng.standard_normal((2,) + tuple(shape))
    return (xy[0] + 1j * xy[1]) * np.sqrt(np.asarray(variance) / 2.0)


@dataclass(frozen=True, eq=False)
class OUState:
    """Current value of the Gaussian field ``Z`` and how it was started.

    ``origin`` is ``"stationary"`` for ``Z_{-inf,t}`` or ``"zero"`` for the
    chain started from 0 at time ``s``.
    """

    t: float
    Z: SpectralField
    mu: float
    origin: str = "stationary"
    s: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.origin not in ("stationary", "zero"):
            raise ValueError(f"unknown origin {self.origin!r}")

    @property
    def grid(self) -> GridSpec:
        return self.Z.grid

    def variance(self) -> np.ndarray:
        """Per-mode variance ``E|Z_hat(k)|^2`` on the coefficient layout."""
        r = rho_grid(self.grid, self.mu)
        if self.origin == "stationary":
            return 1.0 / (2.0 * r)
        return -np.expm1(-2.0 * r * (self.t - self.s)) / (2.0 * r)

    def stationary_variance(self) -> np.ndarray:
        return 1.0 / (2.0 * rho_grid(self.grid, self.mu))

    def physical(self) -> np.ndarray:
        """``Z`` sampled on the padded grid (cached)."""
        if "phys" not in self._cache:
            self._cache["phys"] = self.Z.to_physical()
        return self._cache["phys"]


def increment_variance(grid: GridSpec, mu: float, delta: float) -> np.ndarray:
    r = rho_grid(grid, mu)
    return -np.expm1(-2.0 * r * delta) / (2.0 * r)


def sample_stationary(grid: GridSpec, mu: float, rng: NoiseStream, t: float = 0.0) -> OUState:
    """Draw ``Z_{-inf,t}``: independent ``CN(0, 1/(2 rho_k))`` coefficients."""
    std = np.sqrt(1.0 / (2.0 * rho_grid(grid, mu)))
    coeffs = rng.standard_complex(grid, lane=LANE_STATIONARY) * std
    return OUState(t=t, Z=SpectralField(grid, coeffs), mu=mu, origin="stationary")


def zero_start(grid: GridSpec, mu: float, s: float = 0.0, batch: tuple[int, ...] = ()) -> OUState:
    """The chain ``Z_{s,t}`` at ``t = s``: identically zero."""
    return OUState(t=s, Z=SpectralField.zeros(grid, batch), mu=mu, origin="zero", s=s)


def draw_increment(grid: GridSpec, mu: float, delta: float, rng: NoiseStream) -> np.ndarray:
    """The innovation ``eta`` of one exact step, using the draws at ``rng.step``."""
    return rng.standard_complex(grid, lane=LANE_INCREMENT) * np.sqrt(increment_variance(grid, mu, delta))


def evolve_with(state: OUState, delta: float, eta: np.ndarray) -> OUState:
    """Exact transition with an explicitly supplied innovation ``eta``."""
    if not delta > 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    coeffs = semigroup(state.grid, delta, state.mu) * state.Z.coeffs + eta
    return replace(state, t=state.t + delta, Z=SpectralField(state.grid, coeffs), _cache={})


def evolve(state: OUState, delta: float, rng: NoiseStream) -> OUState:
    """Advance ``Z`` by ``delta`` using the draws at ``rng.step``.

    The caller advances ``rng``; two chains fed the same ``rng`` position see
    identical innovations.
    """
    if not delta > 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    return evolve_with(state, delta, draw_increment(state.grid, state.mu, delta, rng))


def combine_increments(grid: GridSpec, mu: float, delta: float, etas: list[np.ndarray]) -> np.ndarray:
    """Innovation of one step of size ``len(etas)*delta`` built from consecutive fine ones.

    ``eta = sum_i P_{(n-1-i) delta} eta_i``, which keeps coarse and fine
    paths on the same Brownian realisation.
    """
    E = semigroup(grid, delta, mu)
    acc = np.zeros_like(etas[0])
    for eta in etas:
        acc = E * acc + eta
    return acc
