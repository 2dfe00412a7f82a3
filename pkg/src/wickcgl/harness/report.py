"""Structured experiment reports (JSON and fixed-column CSV).

Reports hold only quantities that are functions of the configuration and
seed, so equal inputs give byte-identical files.  Wall-clock timings go to
a separate ``timing.json`` next to the report.
"""
from __future__ import annotations

import csv
import io
import json
import math
import platform
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from .. import kernels

SCHEMA_VERSION = "1.0"
CSV_COLUMNS = ("experiment", "observable", "key", "value", "se", "tolerance", "n_samples", "passed")


def _clean(x):
    """Plain JSON-compatible values; non-finite floats become strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [_clean(float(x.real)), _clean(float(x.imag))]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


@dataclass
class Check:
    """One asserted number with its tolerance and sample size."""

    observable: str
    key: str
    value: float
    tolerance: str
    n_samples: int
    passed: bool
    se: float | None = None
    note: str = ""


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    checks: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    blowups: int = 0
    timing: dict = field(default_factory=dict)

    def check(self, observable: str, key: str, value, tolerance: str, n_samples: int, passed: bool,
              se=None, note: str = "") -> bool:
        self.checks.append(Check(observable, key, float(value), tolerance, int(n_samples), bool(passed),
                                 None if se is None else float(se), note))
        return bool(passed)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def environment(self) -> dict:
        return {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "kernel_backend": kernels.BACKEND,
            "platform": sys.platform,
        }

    def to_dict(self) -> dict:
        return _clean({
            "schema_version": SCHEMA_VERSION,
            "experiment": self.experiment,
            "passed": self.passed,
            "blowups": self.blowups,
            "checks": [asdict(c) for c in self.checks],
            "tables": self.tables,
            "series": self.series,
            "notes": self.notes,
            "config": self.config,
            "environment": self.environment(),
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for c in self.checks:
            w.writerow([self.experiment, c.observable, c.key, repr(c.value),
                        "" if c.se is None else repr(c.se), c.tolerance, c.n_samples, int(c.passed)])
        return buf.getvalue()

    def write(self, out_dir, fmt: str = "json") -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            path = out / f"{self.experiment}_report.json"
            path.write_text(self.to_json(), encoding="utf-8")
        elif fmt == "csv":
            path = out / f"{self.experiment}_report.csv"
            path.write_text(self.to_csv(), encoding="utf-8")
        else:
            raise ValueError(f"unknown report format {fmt!r}")
        if self.timing:
            (out / f"{self.experiment}_timing.json").write_text(
                json.dumps(_clean(self.timing), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    def summary_lines(self) -> list[str]:
        lines = []
        for c in self.checks:
            se = "" if c.se is None else f" se={c.se:.3g}"
            lines.append(f"[{'PASS' if c.passed else 'FAIL'}] {c.observable}/{c.key} = {c.value:.6g}{se} "
                         f"(tol {c.tolerance}, n={c.n_samples})")
        return lines
