"""Run configuration: a TOML file with fixed tables and no unknown keys.

Grammar (every key optional; defaults come from the experiment)::

    experiment = "coupling"         # regularity | wellposedness | coupling | ergodicity | verify
    seed = 42

    [model]
    mu = 2.0
    nu = [1.0, 0.0]                 # complex numbers are [re, im]
    tau = [0.0, 0.0]
    m = 1
    lambda = 0.0
    renorm = "stationary"           # stationary | time | none

    [grid]
    N = 16
    pad = 2

    [run]
    horizon = 10.0
    step = 0.005
    ensemble = 20
    observables = ["l2"]
    out = "results"
    checkpoint_every = 0            # steps; 0 disables
    sample_every = 10               # steps between recorded samples
    burn_in = 0.2                   # fraction of the horizon

    [init]
    kind = "rough"                  # rough | constant | zero
    amplitude = 1.0
    amplitudes = [0.0, 5.0]         # ergodicity: one run per entry
    second_amplitude = 2.0          # coupling: nudged copy starts at this constant

    [exponents]
    alpha = 0.05
    alpha_prime = 0.05
    beta = 0.2
    gamma = 0.25

    [coupling]
    lambdas = [10.0, 25.0, 50.0, 100.0]
    accept_lambda = 50.0
    budget = 5.0

    [regularity]
    orders = [[1, 1], [2, 1]]
    lags = [1e-4, 3e-4, 1e-3, 3e-3]
    increment_exponent = 0.5

    [norms]
    p = [1, 2]

Observables are ``"l2"`` (``||u||_{L^2}^2``), ``"holder"``
(``||u||_{C^{-alpha}}``) and ``"mode(k1,k2)"`` (``|u_hat(k)|^2``).
"""
from __future__ import annotations

import copy
import re
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - depends on interpreter
    import tomli as tomllib
import tomli_w

from ..solver import RENORM_MODES
from ..spectral import GridSpec, ModelParams

EXPERIMENTS = ("regularity", "wellposedness", "coupling", "ergodicity", "verify")
INIT_KINDS = ("rough", "constant", "zero")
_MODE_RE = re.compile(r"^mode\((-?\d+),(-?\d+)\)$")


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


@dataclass
class ModelSection:
    mu: float = 2.0
    nu: list = field(default_factory=lambda: [1.0, 0.0])
    tau: list = field(default_factory=lambda: [0.0, 0.0])
    m: int = 1
    # stored as "lambda" in the file
    lam: float = 0.0
    renorm: str = "stationary"


@dataclass
class GridSection:
    N: int = 16
    pad: int = 2


@dataclass
class RunSection:
    horizon: float = 1.0
    step: float = 1e-3
    ensemble: int = 1
    observables: list = field(default_factory=lambda: ["l2"])
    out: str = "results"
    checkpoint_every: int = 0
    sample_every: int = 10
    burn_in: float = 0.2


@dataclass
class InitSection:
    kind: str = "rough"
    amplitude: float = 1.0
    amplitudes: list = field(default_factory=lambda: [0.0, 5.0])
    second_amplitude: float = 2.0


@dataclass
class ExponentSection:
    alpha: float = 0.05
    alpha_prime: float = 0.05
    beta: float = 0.2
    gamma: float = 0.25


@dataclass
class CouplingSection:
    lambdas: list = field(default_factory=lambda: [10.0, 25.0, 50.0, 100.0])
    accept_lambda: float = 50.0
    budget: float = 5.0


@dataclass
class RegularitySection:
    orders: list = field(default_factory=lambda: [[1, 1], [2, 1]])
    lags: list = field(default_factory=lambda: [1e-4, 3e-4, 1e-3, 3e-3])
    increment_exponent: float = 0.5


@dataclass
class NormSection:
    p: list = field(default_factory=lambda: [1, 2])


_SECTIONS = {
    "model": ModelSection,
    "grid": GridSection,
    "run": RunSection,
    "init": InitSection,
    "exponents": ExponentSection,
    "coupling": CouplingSection,
    "regularity": RegularitySection,
    "norms": NormSection,
}
_RENAMES = {("model", "lambda"): "lam"}


@dataclass
class RunConfig:
    experiment: str = "verify"
    seed: int = 0
    model: ModelSection = field(default_factory=ModelSection)
    grid: GridSection = field(default_factory=GridSection)
    run: RunSection = field(default_factory=RunSection)
    init: InitSection = field(default_factory=InitSection)
    exponents: ExponentSection = field(default_factory=ExponentSection)
    coupling: CouplingSection = field(default_factory=CouplingSection)
    regularity: RegularitySection = field(default_factory=RegularitySection)
    norms: NormSection = field(default_factory=NormSection)

    def __post_init__(self):
        self.validate()

    # -- derived objects ---------------------------------------------------

    def params(self, **overrides) -> ModelParams:
        md = self.model
        kw = dict(mu=float(md.mu), nu=complex(*md.nu), tau=complex(*md.tau), m=int(md.m), lam=float(md.lam))
        kw.update(overrides)
        return ModelParams(**kw)

    def grid_spec(self, N: int | None = None) -> GridSpec:
        return GridSpec(int(self.grid.N if N is None else N), int(self.grid.pad))

    @property
    def n_steps(self) -> int:
        return int(round(self.run.horizon / self.run.step))

    # -- validation ----------------------------------------------------------

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**63:
            raise ConfigError(f"seed must be a non-negative 63-bit integer, got {self.seed!r}")
        for name in ("nu", "tau"):
            val = getattr(self.model, name)
            if not (isinstance(val, list) and len(val) == 2):
                raise ConfigError(f"model.{name} must be [re, im]")
        if self.model.renorm not in RENORM_MODES:
            raise ConfigError(f"model.renorm must be one of {RENORM_MODES}")
        try:
            self.params()
            grid = self.grid_spec()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if grid.max_alias_free_degree() < 2 * int(self.model.m) + 1:
            raise ConfigError(f"grid.pad={grid.pad} cannot dealias the degree-{2 * self.model.m + 1} drift")
        r = self.run
        if not r.horizon > 0 or not r.step > 0 or r.step > r.horizon:
            raise ConfigError("run.horizon and run.step must be positive with step <= horizon")
        if abs(r.horizon / r.step - round(r.horizon / r.step)) > 1e-9 * r.horizon / r.step:
            raise ConfigError("run.horizon must be an integer multiple of run.step")
        if r.ensemble < 1 or r.sample_every < 1 or r.checkpoint_every < 0:
            raise ConfigError("run.ensemble and run.sample_every must be >= 1, checkpoint_every >= 0")
        if not 0 <= r.burn_in < 1:
            raise ConfigError("run.burn_in must lie in [0, 1)")
        for obs in r.observables:
            if obs not in ("l2", "holder") and not _MODE_RE.match(obs):
                raise ConfigError(f"unknown observable {obs!r}")
            mm = _MODE_RE.match(obs)
            if mm and max(abs(int(mm.group(1))), abs(int(mm.group(2)))) > grid.N:
                raise ConfigError(f"observable {obs} outside the cutoff N={grid.N}")
        if self.init.kind not in INIT_KINDS:
            raise ConfigError(f"init.kind must be one of {INIT_KINDS}")
        if not self.coupling.lambdas or any(l < 0 for l in self.coupling.lambdas):
            raise ConfigError("coupling.lambdas must be a non-empty list of values >= 0")
        for kl in self.regularity.orders:
            if not (isinstance(kl, list) and len(kl) == 2 and min(kl) >= 0 and sum(kl) >= 1):
                raise ConfigError(f"regularity.orders entries must be [k, l] with k+l >= 1, got {kl!r}")
        if any(h <= 0 for h in self.regularity.lags):
            raise ConfigError("regularity.lags must be positive")
        if any(int(p) != p or p < 1 for p in self.norms.p):
            raise ConfigError("norms.p must be integers >= 1")

    # -- file form -------------------------------------------------------------

    def to_dict(self) -> dict:
        out = {"experiment": self.experiment, "seed": self.seed}
        for name in _SECTIONS:
            sec = asdict(getattr(self, name))
            out[name] = {_file_key(name, k): v for k, v in sec.items()}
        return out

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict, base: "RunConfig | None" = None) -> "RunConfig":
        data = copy.deepcopy(data)
        unknown = set(data) - {"experiment", "seed"} - set(_SECTIONS)
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
        kwargs = {}
        if base is not None:
            kwargs = {f.name: copy.deepcopy(getattr(base, f.name)) for f in fields(cls)}
        for key in ("experiment", "seed"):
            if key in data:
                kwargs[key] = data[key]
        for name, section_cls in _SECTIONS.items():
            raw = data.get(name, {})
            if not isinstance(raw, dict):
                raise ConfigError(f"[{name}] must be a table")
            allowed = {_file_key(name, f.name): f.name for f in fields(section_cls)}
            bad = set(raw) - set(allowed)
            if bad:
                raise ConfigError(f"unknown keys in [{name}]: {sorted(bad)}")
            current = kwargs.get(name, section_cls())
            values = asdict(current)
            for k, v in raw.items():
                values[allowed[k]] = _coerce(section_cls, allowed[k], v, name)
            kwargs[name] = section_cls(**values)
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_toml(cls, text: str, base: "RunConfig | None" = None) -> "RunConfig":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        return cls.from_dict(data, base)


def _file_key(section: str, attr: str) -> str:
    for (sec, key), name in _RENAMES.items():
        if sec == section and name == attr:
            return key
    return attr


def _coerce(section_cls, attr: str, value, section: str):
    default = getattr(section_cls(), attr)
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    elif isinstance(default, str):
        ok = isinstance(value, str)
    elif isinstance(default, list):
        ok = isinstance(value, list)
        if ok and attr in ("nu", "tau", "lambdas", "lags", "amplitudes"):
            ok = all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)
            value = [float(x) for x in value] if ok else value
    else:  # pragma: no cover
        ok = True
    if not ok:
        raise ConfigError(f"[{section}] {attr}: unexpected value {value!r}")
    return value


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return RunConfig.from_toml(p.read_text(encoding="utf-8"), base)


def parse_observable(name: str):
    """``("l2", None)``, ``("holder", None)`` or ``("mode", (k1, k2))``."""
    mm = _MODE_RE.match(name)
    if mm:
        return "mode", (int(mm.group(1)), int(mm.group(2)))
    if name in ("l2", "holder"):
        return name, None
    raise ConfigError(f"unknown observable {name!r}")


def default_config(experiment: str, seed: int = 0) -> RunConfig:
    """Desk-scale defaults for each experiment."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    cfg = RunConfig(experiment=experiment, seed=seed)
    if experiment == "regularity":
        cfg.grid = GridSection(N=32, pad=2)
        cfg.model.mu = 1.0
        cfg.run = RunSection(horizon=1.0, step=1.0, ensemble=1000)
    elif experiment == "wellposedness":
        cfg.grid = GridSection(N=32, pad=2)
        cfg.run = RunSection(horizon=10.0, step=1e-3, ensemble=20, sample_every=10)
    elif experiment == "coupling":
        cfg.model.tau = [1.0, 0.0]
        cfg.run = RunSection(horizon=10.0, step=5e-3, ensemble=20, sample_every=5)
    elif experiment == "ergodicity":
        cfg.run = RunSection(horizon=62.5, step=5e-3, ensemble=1, sample_every=10,
                             observables=["mode(0,0)", "mode(1,0)", "mode(0,1)", "mode(1,1)", "l2", "holder"])
        cfg.init.kind = "constant"
    else:
        cfg.grid = GridSection(N=8, pad=2)
        cfg.run = RunSection(horizon=0.05, step=1e-3, ensemble=8)
    cfg.validate()
    return cfg
