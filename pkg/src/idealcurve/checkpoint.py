"""Binary checkpoints of a flow state.

Layout (all little-endian)::

    b"ICFL"  u32 version  u32 N  f64[2N] points (row-major)  f64 t  f64 dt  f64 D  u32 crc32

The CRC covers every byte before it.  The step counter is not stored; a
loaded state restarts counting from zero.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import CorruptCheckpoint, IdealCurveError
from .flow import FlowState
from .geometry import CurveState

MAGIC = b"ICFL"
VERSION = 1
_HEAD = struct.Struct("<4sII")
_TAIL = struct.Struct("<dddI")


def checkpoint_save(state: FlowState) -> bytes:
    pts = np.ascontiguousarray(state.curve.points, dtype="<f8")
    body = (_HEAD.pack(MAGIC, VERSION, pts.shape[0]) + pts.tobytes()
            + struct.pack("<ddd", state.t, state.dt, state.dissipation))
    return body + struct.pack("<I", zlib.crc32(body))


def checkpoint_load(data: bytes) -> FlowState:
    data = bytes(data)
    if len(data) < _HEAD.size + _TAIL.size:
        raise CorruptCheckpoint(f"checkpoint truncated: {len(data)} bytes")
    magic, version, n = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise CorruptCheckpoint(f"bad magic {magic!r}")
    if version != VERSION:
        raise CorruptCheckpoint(f"unsupported checkpoint version {version} (expected {VERSION})")
    expected = _HEAD.size + 16 * n + _TAIL.size
    if len(data) != expected:
        raise CorruptCheckpoint(f"checkpoint has {len(data)} bytes, expected {expected} for N={n}")
    (crc,) = struct.unpack_from("<I", data, len(data) - 4)
    if zlib.crc32(data[:-4]) != crc:
        raise CorruptCheckpoint("checksum mismatch")
    pts = np.frombuffer(data, dtype="<f8", count=2 * n, offset=_HEAD.size).reshape(n, 2)
    t, dt, dissipation = struct.unpack_from("<ddd", data, _HEAD.size + 16 * n)
    try:
        return FlowState.initial(CurveState(pts.astype(float)), t=t, dissipation=dissipation,
                                 dt=dt)
    except IdealCurveError as exc:
        raise CorruptCheckpoint(f"checkpoint holds an invalid curve: {exc}") from exc


def save_checkpoint_file(state: FlowState, path) -> None:
    Path(path).write_bytes(checkpoint_save(state))


def load_checkpoint_file(path) -> FlowState:
    return checkpoint_load(Path(path).read_bytes())
