"""Classical baselines: frequency-domain ramp filtering and filtered
backprojection.

Each detector row is zero-padded to ``pad_length`` (a power of two, at
least twice the row length, to keep the circular convolution from wrapping
into the crop), transformed, multiplied by the |f| ramp (zero at DC), and
transformed back.  FBP is that filter followed by the adjoint projector,
scaled by the angular spacing in radians.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import StackKind, TiltStack, Volume
from .projector import ProjectorSpec, backproject


def next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


@dataclass(frozen=True)
class FilterSpec:
    filter_name: str = "ram_lak"
    pad_length: int | None = None  # default: next power of two >= 2 * n_w
    delta_theta_rad: float | None = None  # default: (max - min) / n_view

    def __post_init__(self):
        if self.filter_name != "ram_lak":
            raise ValueError(f"unknown filter {self.filter_name!r}")
        if self.pad_length is not None and self.pad_length & (self.pad_length - 1):
            raise ValueError("pad_length must be a power of two")

    def resolve_pad(self, n_w: int) -> int:
        pad = self.pad_length if self.pad_length is not None else next_pow2(2 * n_w)
        if pad < n_w:
            raise ValueError(f"pad_length {pad} shorter than row length {n_w}")
        return pad

    def resolve_normalization(self, geometry) -> float:
        if self.delta_theta_rad is not None:
            return self.delta_theta_rad
        angles = geometry.angles_deg
        return np.deg2rad(angles[-1] - angles[0]) / len(angles)


def ramlak_filter(y: TiltStack, spec: FilterSpec) -> TiltStack:
    """Ramp-filter every detector row (along columns, rows independent)."""
    if y.kind not in (StackKind.RAW, StackKind.AUGMENTED):
        raise ValueError(f"cannot filter a stack of kind {y.kind.value}")
    n_view, n_h, n_w = y.dims
    pad = spec.resolve_pad(n_w)
    ramp = np.abs(np.fft.fftfreq(pad))  # |f|, f in [-1/2, 1/2) cycles/sample
    spectra = np.fft.fft(y.data.astype(np.float64), n=pad, axis=2)
    filtered = np.fft.ifft(spectra * ramp, axis=2)[:, :, :n_w]
    out = filtered.real.astype(np.float32)
    return y.derive(out, StackKind.FILTERED)


def fbp(y: TiltStack, spec_f: FilterSpec, spec_p: ProjectorSpec) -> Volume:
    """Filtered backprojection: normalization * backproject(ramlak(y))."""
    filtered = ramlak_filter(y, spec_f)
    # the adjoint only checks dims/angles, not kind, so feed it directly
    vol = backproject(filtered, spec_p)
    norm = spec_f.resolve_normalization(y.geometry)
    return Volume(norm * vol.data)
