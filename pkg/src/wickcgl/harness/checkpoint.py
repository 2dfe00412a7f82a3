"""Binary checkpoints of solver states.

Layout (all integers little-endian)::

    b"WCGL"  u32 version
    u32 len  UTF-8 TOML echo of the run configuration
    u32 len  UTF-8 JSON header (kind, time, grid, batch shape, flags)
    payload  complex128 coefficients as (re, im) f64 pairs, row-major k order:
             v, then Z (if noise), then w_hat and log_scale (if coupled)
    u64 seed, u32 n_streams, u64 streams..., u64 step      (if noise)
    u32 CRC-32 of everything above

A file that fails any check raises :class:`CheckpointError` and no state is
returned.
"""
from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..noise import NoiseStream, OUState
from ..solver import CoupledState, SolverState
from ..spectral import GridSpec, SpectralField
from .config import RunConfig

MAGIC = b"WCGL"
VERSION = 1
_C16 = np.dtype("<c16")
_F8 = np.dtype("<f8")


class CheckpointError(ValueError):
    """Corrupt, truncated or incompatible checkpoint."""


@dataclass
class Checkpoint:
    config: RunConfig
    state: SolverState | CoupledState
    step_index: int


def _header(state: SolverState | CoupledState, step_index: int) -> dict:
    base = state.base if isinstance(state, CoupledState) else state
    g = base.grid
    h = {
        "kind": "coupled" if isinstance(state, CoupledState) else "single",
        "t": base.t.hex() if isinstance(base.t, float) else float(base.t).hex(),
        "step_index": int(step_index),
        "N": g.N,
        "pad": g.pad,
        "batch": list(base.v.batch_shape),
        "renorm": base.renorm,
        "noise": base.noise is not None,
    }
    if base.noise is not None:
        h.update(origin=base.noise.origin, s=float(base.noise.s).hex(), noise_t=float(base.noise.t).hex())
    if isinstance(state, CoupledState):
        h["lam"] = float(state.lam).hex()
    return h


def encode(cfg: RunConfig, state: SolverState | CoupledState, step_index: int = 0) -> bytes:
    base = state.base if isinstance(state, CoupledState) else state
    cfg_blob = cfg.to_toml().encode("utf-8")
    hdr_blob = json.dumps(_header(state, step_index), sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack("<I", VERSION),
             struct.pack("<I", len(cfg_blob)), cfg_blob,
             struct.pack("<I", len(hdr_blob)), hdr_blob,
             np.ascontiguousarray(base.v.coeffs, dtype=_C16).tobytes()]
    if base.noise is not None:
        parts.append(np.ascontiguousarray(base.noise.Z.coeffs, dtype=_C16).tobytes())
    if isinstance(state, CoupledState):
        parts.append(np.ascontiguousarray(state.w_hat.coeffs, dtype=_C16).tobytes())
        parts.append(np.ascontiguousarray(np.broadcast_to(state.log_scale, base.v.batch_shape), dtype=_F8).tobytes())
    if base.noise is not None:
        rng = base.rng
        parts.append(struct.pack("<QI", rng.seed, len(rng.streams)))
        parts.append(struct.pack(f"<{len(rng.streams)}Q", *rng.streams))
        parts.append(struct.pack("<Q", rng.step))
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise CheckpointError("truncated checkpoint")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode(data: bytes) -> Checkpoint:
    if len(data) < 12 or data[:4] != MAGIC:
        raise CheckpointError("bad magic: not a checkpoint file")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise CheckpointError("checksum mismatch: file is corrupt")
    r = _Reader(body)
    r.take(4)
    (version,) = r.unpack("<I")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (n,) = r.unpack("<I")
    try:
        cfg = RunConfig.from_toml(r.take(n).decode("utf-8"))
        (n,) = r.unpack("<I")
        hdr = json.loads(r.take(n).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError, ValueError) as exc:
        raise CheckpointError(f"unreadable checkpoint header: {exc}") from exc
    grid = GridSpec(int(hdr["N"]), int(hdr["pad"]))
    batch = tuple(hdr["batch"])
    shape = batch + grid.shape
    count = int(np.prod(shape))

    def field_array():
        return np.frombuffer(r.take(count * 16), dtype=_C16).reshape(shape).astype(complex)

    params = cfg.params()
    v = SpectralField(grid, field_array())
    noise = None
    if hdr["noise"]:
        Z = SpectralField(grid, field_array())
        noise = OUState(t=float.fromhex(hdr["noise_t"]), Z=Z, mu=params.mu, origin=hdr["origin"],
                        s=float.fromhex(hdr["s"]))
    w_hat = log_scale = None
    if hdr["kind"] == "coupled":
        w_hat = SpectralField(grid, field_array())
        nb = int(np.prod(batch)) if batch else 1
        log_scale = np.frombuffer(r.take(nb * 8), dtype=_F8).reshape(batch).astype(float)
    rng = None
    if hdr["noise"]:
        seed, ns = r.unpack("<QI")
        streams = r.unpack(f"<{ns}Q")
        (step,) = r.unpack("<Q")
        rng = NoiseStream(seed=seed, streams=tuple(streams), step=step)
    if r.pos != len(body):
        raise CheckpointError("trailing bytes in checkpoint")
    base = SolverState(t=float.fromhex(hdr["t"]), v=v, noise=noise, params=params, rng=rng,
                       renorm=hdr["renorm"])
    state = base
    if hdr["kind"] == "coupled":
        state = CoupledState(base=base, w_hat=w_hat, log_scale=log_scale, lam=float.fromhex(hdr["lam"]))
    return Checkpoint(config=cfg, state=state, step_index=int(hdr["step_index"]))


def save_checkpoint(path, cfg: RunConfig, state: SolverState | CoupledState, step_index: int = 0) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    tmp = p.with_suffix(p.suffix + ".tmp")
    tmp.write_bytes(encode(cfg, state, step_index))
    tmp.replace(p)
    return p


def load_checkpoint(path) -> Checkpoint:
    p = Path(path)
    try:
        data = p.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {p}: {exc}") from exc
    return decode(data)
