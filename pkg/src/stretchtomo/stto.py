"""STTO tensor interchange format.

Layout (all integers little-endian):

    bytes 0..3    magic "STTO"
    bytes 4..7    format version, u32 (currently 1)
    bytes 8..11   dtype code, u32 (1 = IEEE-754 float32 little-endian)
    bytes 12..15  rank, u32
    then          rank dims, u32 each
    then          row-major float32 payload

A TiltStack additionally gets a JSON sidecar at ``path + ".json"`` with keys
"angles_deg", "kind" and "tilt_axis"; its presence is what distinguishes a
stack from a plain volume on read.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Union

import numpy as np

from .core import StackKind, StretchtomoError, TiltGeometry, TiltStack, Volume

MAGIC = b"STTO"
VERSION = 1
DTYPE_F32 = 1


class SttoFormatError(StretchtomoError):
    pass


def _sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def write_tensor(t: Union[Volume, TiltStack], path) -> None:
    """Write a Volume or TiltStack to ``path`` (sidecar added for stacks)."""
    path = Path(path)
    if not path.parent.exists():
        raise StretchtomoError(f"parent directory does not exist: {path.parent}")
    if isinstance(t, Volume):
        data, sidecar = t.data, None
    elif isinstance(t, TiltStack):
        data = t.data
        sidecar = {
            "angles_deg": list(t.geometry.angles_deg),
            "kind": t.kind.value,
            "tilt_axis": t.geometry.tilt_axis,
        }
    else:
        raise TypeError(f"cannot serialize {type(t).__name__}")
    if not np.all(np.isfinite(data)):
        raise StretchtomoError("refusing to write non-finite entries")

    payload = np.ascontiguousarray(data, dtype="<f4")
    header = MAGIC + struct.pack("<III", VERSION, DTYPE_F32, payload.ndim)
    header += struct.pack(f"<{payload.ndim}I", *payload.shape)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload.tobytes())
    except OSError as exc:
        raise StretchtomoError(f"failed to write {path}: {exc}") from exc
    if sidecar is not None:
        with open(_sidecar_path(path), "w") as fh:
            json.dump(sidecar, fh, indent=2)
            fh.write("\n")


def read_tensor(path) -> Union[Volume, TiltStack]:
    """Read a tensor written by :func:`write_tensor`.

    Returns a TiltStack when the JSON sidecar is present, else a Volume.
    """
    path = Path(path)
    if not path.exists():
        raise StretchtomoError(f"no such file: {path}")
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise StretchtomoError(f"failed to read {path}: {exc}") from exc

    if len(raw) < 16:
        raise SttoFormatError(f"{path}: file shorter than the fixed header")
    if raw[:4] != MAGIC:
        raise SttoFormatError(f"{path}: bad magic {raw[:4]!r}, expected {MAGIC!r}")
    version, dtype, rank = struct.unpack_from("<III", raw, 4)
    if version != VERSION:
        raise SttoFormatError(f"{path}: unsupported version {version}")
    if dtype != DTYPE_F32:
        raise SttoFormatError(f"{path}: unsupported dtype code {dtype}")
    if len(raw) < 16 + 4 * rank:
        raise SttoFormatError(f"{path}: header truncated before {rank} dims")
    dims = struct.unpack_from(f"<{rank}I", raw, 16)
    offset = 16 + 4 * rank

    count = int(np.prod(dims, dtype=np.int64)) if rank else 1
    expected = count * 4
    got = len(raw) - offset
    if got != expected:
        raise SttoFormatError(
            f"{path}: payload length {got} bytes does not match dims "
            f"{'x'.join(map(str, dims))} ({expected} bytes)"
        )
    data = np.frombuffer(raw, dtype="<f4", count=count, offset=offset).reshape(dims)

    sidecar = _sidecar_path(path)
    if sidecar.exists():
        with open(sidecar) as fh:
            meta = json.load(fh)
        if rank != 3:
            raise SttoFormatError(f"{path}: tilt stack must be rank 3, got {rank}")
        geometry = TiltGeometry(
            angles_deg=tuple(meta["angles_deg"]),
            n_h=dims[1],
            n_w=dims[2],
            tilt_axis=meta.get("tilt_axis", "y"),
        )
        return TiltStack(data, geometry, StackKind(meta["kind"]))
    if rank != 3:
        raise SttoFormatError(f"{path}: volume must be rank 3, got {rank}")
    return Volume(data)
