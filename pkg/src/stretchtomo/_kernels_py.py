"""Pure-numpy kernels: the fallback backend when the compiled extension
is unavailable (and the cross-check reference for it when it is).

All four kernels share the geometry conventions of the compiled versions:
centered pixel coordinates (pixel p on an axis of length n sits at
p - (n-1)/2), linear interpolation along columns, zero outside the slab.
Accumulations run in float64, results are float32.
"""
from __future__ import annotations

import numpy as np


def _interp_weights(pos: np.ndarray, n_w: int):
    """Split fractional column positions into (lo, hi, frac, inside).

    Positions exactly on the last column get the edge pixel with weight 1.
    """
    inside = (pos >= 0.0) & (pos <= n_w - 1)
    safe = np.where(inside, pos, 0.0)
    lo = np.floor(safe).astype(np.intp)
    lo = np.minimum(lo, n_w - 1)
    frac = safe - lo
    hi = np.minimum(lo + 1, n_w - 1)
    return lo, hi, frac, inside


def project(x: np.ndarray, angles_rad: np.ndarray, path_weighting: bool,
            num_threads: int = 0) -> np.ndarray:
    """Tilt-around-y parallel projection of a (n_d, n_h, n_w) volume.

    num_threads is accepted for signature parity; numpy runs single-threaded.
    """
    n_d, n_h, n_w = x.shape
    n_view = len(angles_rad)
    cj = 0.5 * (n_w - 1)
    cz = 0.5 * (n_d - 1)
    out = np.zeros((n_view, n_h, n_w), dtype=np.float32)
    xd = x.astype(np.float64, copy=False)
    j_centered = np.arange(n_w, dtype=np.float64) - cj
    for k, theta in enumerate(angles_rad):
        sec = 1.0 / np.cos(theta)
        tn = np.tan(theta)
        w = sec if path_weighting else 1.0
        base = j_centered * sec + cj
        acc = np.zeros((n_h, n_w), dtype=np.float64)
        for z in range(n_d):
            pos = base + (z - cz) * tn
            lo, hi, frac, inside = _interp_weights(pos, n_w)
            xz = xd[z]
            vals = (1.0 - frac) * xz[:, lo] + frac * xz[:, hi]
            acc += np.where(inside, vals, 0.0)
        out[k] = (w * acc).astype(np.float32)
    return out


def backproject(y: np.ndarray, angles_rad: np.ndarray, path_weighting: bool,
                n_d: int, num_threads: int = 0) -> np.ndarray:
    """Exact transpose of :func:`project`."""
    n_view, n_h, n_w = y.shape
    cj = 0.5 * (n_w - 1)
    cz = 0.5 * (n_d - 1)
    acc = np.zeros((n_d, n_h, n_w), dtype=np.float64)
    yd = y.astype(np.float64, copy=False)
    j_centered = np.arange(n_w, dtype=np.float64) - cj
    for k, theta in enumerate(angles_rad):
        sec = 1.0 / np.cos(theta)
        tn = np.tan(theta)
        w = sec if path_weighting else 1.0
        base = j_centered * sec + cj
        wy = w * yd[k]
        for z in range(n_d):
            pos = base + (z - cz) * tn
            lo, hi, frac, inside = _interp_weights(pos, n_w)
            contrib_lo = np.where(inside, (1.0 - frac) * wy, 0.0)
            contrib_hi = np.where(inside, frac * wy, 0.0)
            np.add.at(acc[z], (slice(None), lo), contrib_lo)
            np.add.at(acc[z], (slice(None), hi), contrib_hi)
    return acc.astype(np.float32)


def _stretch_positions(theta: float, n_w: int, magnify: bool) -> np.ndarray:
    """Source column position for every output column of one view."""
    cj = 0.5 * (n_w - 1)
    scale = np.cos(theta) if magnify else 1.0 / np.cos(theta)
    q = np.arange(n_w, dtype=np.float64)
    return (q - cj) * scale + cj


def stretch(y: np.ndarray, angles_rad: np.ndarray, magnify: bool,
            num_threads: int = 0) -> np.ndarray:
    """Per-view resampling along columns; size-preserving, zero fill."""
    n_view, n_h, n_w = y.shape
    out = np.empty_like(y, dtype=np.float32)
    yd = y.astype(np.float64, copy=False)
    for k, theta in enumerate(angles_rad):
        pos = _stretch_positions(theta, n_w, magnify)
        lo, hi, frac, inside = _interp_weights(pos, n_w)
        vals = (1.0 - frac) * yd[k][:, lo] + frac * yd[k][:, hi]
        out[k] = np.where(inside, vals, 0.0).astype(np.float32)
    return out


def stretch_adjoint(ys: np.ndarray, angles_rad: np.ndarray, magnify: bool,
                    num_threads: int = 0) -> np.ndarray:
    """Exact transpose of :func:`stretch`."""
    n_view, n_h, n_w = ys.shape
    out = np.zeros((n_view, n_h, n_w), dtype=np.float64)
    yd = ys.astype(np.float64, copy=False)
    for k, theta in enumerate(angles_rad):
        pos = _stretch_positions(theta, n_w, magnify)
        lo, hi, frac, inside = _interp_weights(pos, n_w)
        contrib_lo = np.where(inside, (1.0 - frac) * yd[k], 0.0)
        contrib_hi = np.where(inside, frac * yd[k], 0.0)
        np.add.at(out[k], (slice(None), lo), contrib_lo)
        np.add.at(out[k], (slice(None), hi), contrib_hi)
    return out.astype(np.float32)
