"""Core dense tensor types, coordinate conventions and normalization.

Everything downstream (projection, stretching, filtering, augmentation)
works on the two container types defined here.  Both are immutable after
construction: the wrapped numpy buffers are marked read-only, so instances
can be shared freely across threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

VARIANCE_FLOOR = 1e-12


class StretchtomoError(Exception):
    """Base class for errors raised by this package."""


class StackKind(str, Enum):
    RAW = "raw"
    AUGMENTED = "augmented"
    STRETCHED = "stretched"
    FILTERED = "filtered"


# kind transitions allowed for representation transforms / augmentation
_KIND_ORDER = {
    StackKind.RAW: (StackKind.AUGMENTED, StackKind.STRETCHED, StackKind.FILTERED),
    StackKind.AUGMENTED: (StackKind.AUGMENTED, StackKind.STRETCHED, StackKind.FILTERED),
    StackKind.STRETCHED: (),
    StackKind.FILTERED: (),
}


def _as_f32_readonly(data: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(data, dtype=np.float32)
    if arr.base is data or arr is data:
        arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TiltGeometry:
    """Ordered tilt angles plus detector dimensions.

    Rows of a tilt view run parallel to the tilt axis (fixed to "y" here),
    so tilting only displaces content along columns.
    """

    angles_deg: tuple[float, ...]
    n_h: int
    n_w: int
    tilt_axis: str = "y"

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles_deg)
        object.__setattr__(self, "angles_deg", angles)
        if len(angles) == 0:
            raise ValueError("geometry needs at least one tilt angle")
        for a in angles:
            if not -90.0 < a < 90.0:
                raise ValueError(f"tilt angle {a} out of open interval (-90, 90)")
        if any(b <= a for a, b in zip(angles, angles[1:])):
            raise ValueError("tilt angles must be strictly increasing")
        if self.tilt_axis != "y":
            raise ValueError(f"unsupported tilt axis {self.tilt_axis!r}")
        if self.n_h < 1 or self.n_w < 1:
            raise ValueError("detector dims must be positive")

    @property
    def n_view(self) -> int:
        return len(self.angles_deg)

    @property
    def angles_rad(self) -> np.ndarray:
        return np.deg2rad(np.asarray(self.angles_deg, dtype=np.float64))


@dataclass(frozen=True)
class Volume:
    """Dense 3-D density grid indexed (z, y, x)."""

    data: np.ndarray

    def __post_init__(self):
        arr = _as_f32_readonly(self.data)
        if arr.ndim != 3:
            raise ValueError(f"volume must be rank 3, got rank {arr.ndim}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("volume contains non-finite entries")
        object.__setattr__(self, "data", arr)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape  # (n_d, n_h, n_w)


@dataclass(frozen=True)
class TiltStack:
    """Stack of 2-D tilt views indexed (view, row, column) plus geometry."""

    data: np.ndarray
    geometry: TiltGeometry
    kind: StackKind = StackKind.RAW

    def __post_init__(self):
        arr = _as_f32_readonly(self.data)
        if arr.ndim != 3:
            raise ValueError(f"tilt stack must be rank 3, got rank {arr.ndim}")
        if arr.shape[0] != self.geometry.n_view:
            raise ValueError(
                f"stack has {arr.shape[0]} views but geometry lists "
                f"{self.geometry.n_view} angles"
            )
        if arr.shape[1:] != (self.geometry.n_h, self.geometry.n_w):
            raise ValueError(
                f"stack views are {arr.shape[1:]} but geometry says "
                f"({self.geometry.n_h}, {self.geometry.n_w})"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("tilt stack contains non-finite entries")
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "kind", StackKind(self.kind))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape  # (n_view, n_h, n_w)

    def derive(self, data: np.ndarray, kind: StackKind) -> "TiltStack":
        """New stack with the same geometry; enforces the kind ordering."""
        kind = StackKind(kind)
        if kind not in _KIND_ORDER[self.kind]:
            raise ValueError(f"illegal kind transition {self.kind.value} -> {kind.value}")
        return TiltStack(data, self.geometry, kind)


def index_to_natural(p, n: int):
    """Pixel index -> natural coordinate in [-1, 1]; a length-1 axis maps to 0."""
    if n < 1:
        raise ValueError("axis length must be positive")
    if n == 1:
        return np.zeros_like(np.asarray(p, dtype=np.float64)) if np.ndim(p) else 0.0
    return (2.0 * np.asarray(p, dtype=np.float64) - (n - 1)) / (n - 1)


def natural_to_index(u, n: int):
    """Natural coordinate in [-1, 1] -> (fractional) pixel index."""
    if n < 1:
        raise ValueError("axis length must be positive")
    if n == 1:
        return np.zeros_like(np.asarray(u, dtype=np.float64)) if np.ndim(u) else 0.0
    return (np.asarray(u, dtype=np.float64) + 1.0) * (n - 1) / 2.0


def normalize_zero_mean_unit_var(a: np.ndarray) -> np.ndarray:
    """Normalize to zero mean and unit population variance.

    Moments are accumulated in float64.  Inputs whose variance falls below
    the floor (constant patches from padded phantoms, say) come back as
    all zeros instead of dividing by ~0.
    """
    arr = np.asarray(a)
    if arr.size < 2:
        raise ValueError("normalization needs at least 2 elements")
    mean = arr.mean(dtype=np.float64)
    var = arr.var(dtype=np.float64)  # population (divide-by-N) variance
    if var < VARIANCE_FLOOR:
        return np.zeros_like(arr, dtype=np.float32)
    out = (arr.astype(np.float64) - mean) / np.sqrt(var)
    return out.astype(np.float32)
