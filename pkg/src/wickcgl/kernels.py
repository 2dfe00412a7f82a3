"""Backend selection for the pointwise kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback.  Setting ``WICKCGL_BACKEND=python`` forces the fallback.
"""
from __future__ import annotations

import logging
import os

from . import _kernels_py

logger = logging.getLogger(__name__)


def _load():
    if os.environ.get("WICKCGL_BACKEND", "").lower() == "python":
        return _kernels_py
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        logger.debug("compiled kernels unavailable, using numpy fallback")
        return _kernels_py
    return _kernels


_impl = _load()

BACKEND: str = _impl.BACKEND
wick_power = _impl.wick_power
wick_drift = _impl.wick_drift
wick_drift_increment = _impl.wick_drift_increment


def available_backends() -> dict:
    out = {"python": _kernels_py}
    try:
        from . import _kernels  # type: ignore[attr-defined]

        out["cython"] = _kernels
    except ImportError:
        pass
    return out
