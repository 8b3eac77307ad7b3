"""Seeded tilt-stack augmentation: Gaussian noise scaled to the projection
statistics, integer misalignment shifts of randomly chosen views, and
per-view normalization.

Randomness is organized as counted substreams keyed by (seed, purpose,
view index), so outputs are bit-identical no matter how work is scheduled,
and the shift log alone is enough to replay a misalignment without the
seed.  The intended pipeline order is noise -> misalign -> normalize,
which :func:`augment_pipeline` enforces.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import StackKind, TiltStack, normalize_zero_mean_unit_var

# substream tags so the same seed never feeds two purposes
_TAG_NOISE = 1
_TAG_SELECT = 2
_TAG_SHIFT = 3


@dataclass(frozen=True)
class AugmentSpec:
    noise_ratio: float = 0.3
    n_misaligned: int = 0
    shift_range: int = 3
    rng_seed: int = 0
    per_view_normalize: bool = True
    noise_std_per_view: bool = False  # default: one std over the whole stack

    def __post_init__(self):
        if self.noise_ratio < 0:
            raise ValueError("noise_ratio must be nonnegative")
        if self.shift_range < 0:
            raise ValueError("shift_range must be nonnegative")
        if self.n_misaligned < 0:
            raise ValueError("n_misaligned must be nonnegative")


def _rng(seed: int, tag: int, view: int | None = None) -> np.random.Generator:
    key = (seed, tag) if view is None else (seed, tag, view)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def add_noise(y: TiltStack, spec: AugmentSpec) -> TiltStack:
    """Add i.i.d. Gaussian noise with std = noise_ratio * std(stack)."""
    if spec.noise_ratio == 0.0:
        return y if y.kind == StackKind.AUGMENTED else y.derive(y.data, StackKind.AUGMENTED)
    data = y.data
    if spec.noise_std_per_view:
        base_std = data.reshape(data.shape[0], -1).std(axis=1, dtype=np.float64)
    else:
        base_std = np.full(data.shape[0], data.std(dtype=np.float64))
    out = np.empty_like(data)
    for k in range(data.shape[0]):
        noise = _rng(spec.rng_seed, _TAG_NOISE, k).standard_normal(data.shape[1:])
        out[k] = data[k] + (spec.noise_ratio * base_std[k]) * noise
    return y.derive(out, StackKind.AUGMENTED)


def _shift_view(view: np.ndarray, di: int, dj: int) -> np.ndarray:
    """Translate by (di, dj) with zero fill in the vacated band."""
    out = np.zeros_like(view)
    n_h, n_w = view.shape
    src_i = slice(max(0, -di), min(n_h, n_h - di))
    src_j = slice(max(0, -dj), min(n_w, n_w - dj))
    dst_i = slice(max(0, di), min(n_h, n_h + di))
    dst_j = slice(max(0, dj), min(n_w, n_w + dj))
    out[dst_i, dst_j] = view[src_i, src_j]
    return out


def misalign(y: TiltStack, spec: AugmentSpec) -> tuple[TiltStack, list[dict]]:
    """Shift n_misaligned distinct views by uniform integer (di, dj).

    Returns the augmented stack and a replayable shift log
    [{"view": k, "di": ..., "dj": ...}, ...] ordered by view index.
    """
    n_view = y.dims[0]
    if spec.n_misaligned > n_view:
        raise ValueError(f"n_misaligned {spec.n_misaligned} exceeds {n_view} views")
    if spec.n_misaligned == 0:
        out = y if y.kind == StackKind.AUGMENTED else y.derive(y.data, StackKind.AUGMENTED)
        return out, []
    chooser = _rng(spec.rng_seed, _TAG_SELECT)
    chosen = np.sort(chooser.choice(n_view, size=spec.n_misaligned, replace=False))
    log = []
    for k in chosen:
        r = _rng(spec.rng_seed, _TAG_SHIFT, int(k))
        di, dj = r.integers(-spec.shift_range, spec.shift_range + 1, size=2)
        log.append({"view": int(k), "di": int(di), "dj": int(dj)})
    out = apply_shifts(y, log)
    return out, log


def apply_shifts(y: TiltStack, shift_log: list[dict]) -> TiltStack:
    """Replay a shift log (no randomness involved)."""
    data = np.array(y.data)
    for entry in shift_log:
        k = entry["view"]
        data[k] = _shift_view(data[k], entry["di"], entry["dj"])
    return y.derive(data, StackKind.AUGMENTED)


def finalize_views(y: TiltStack) -> TiltStack:
    """Normalize every view independently to zero mean, unit variance."""
    out = np.stack([normalize_zero_mean_unit_var(v) for v in y.data])
    kind = StackKind.AUGMENTED if y.kind == StackKind.RAW else y.kind
    return TiltStack(out, y.geometry, kind)


def augment_pipeline(y: TiltStack, spec: AugmentSpec) -> tuple[TiltStack, list[dict]]:
    """Noise, then misalignment, then (optionally) per-view normalization."""
    noisy = add_noise(y, spec)
    shifted, log = misalign(noisy, spec)
    if spec.per_view_normalize:
        shifted = finalize_views(shifted)
    return shifted, log
