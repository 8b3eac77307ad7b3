"""Per-view sinogram stretching: resample every tilt view along columns by
the secant of its tilt angle, keeping the image size.

Two readings of "stretch by sec(theta)" exist and both are provided:

* ``magnify`` (default): output column q samples the input at q*cos(theta)
  (centered units), so content is blown up by sec(theta).  Under this
  package's projector geometry that restores central-plane features to
  their untilted positions, which is the property the whole toolkit is
  built around.  Samples never leave the image.
* ``compress``: output column q samples the input at q*sec(theta), the
  literal index form; content shrinks and out-of-range samples are zero.

Interpolation is linear along columns (rows are untouched, so the bilinear
case degenerates to 1-D); a sample landing exactly on the +-1 boundary
takes the edge pixel.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import backend
from .core import StackKind, TiltGeometry, TiltStack


@dataclass(frozen=True)
class StretchSpec:
    geometry: TiltGeometry
    direction: str = "magnify"  # "magnify" | "compress"
    boundary: str = "zero_fill"

    def __post_init__(self):
        if self.direction not in ("magnify", "compress"):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.boundary != "zero_fill":
            raise ValueError(f"unknown boundary mode {self.boundary!r}")

    @property
    def magnify(self) -> bool:
        return self.direction == "magnify"


def _check_dims(y: TiltStack, spec: StretchSpec) -> None:
    if y.geometry.angles_deg != spec.geometry.angles_deg:
        raise ValueError("stack angles do not match stretch spec")
    if y.dims != (spec.geometry.n_view, spec.geometry.n_h, spec.geometry.n_w):
        raise ValueError(f"stack dims {y.dims} do not match spec geometry")


def stretch(y: TiltStack, spec: StretchSpec) -> TiltStack:
    """Resample every view; output dims equal input dims."""
    _check_dims(y, spec)
    k = backend.kernels()
    out = k.stretch(y.data, spec.geometry.angles_rad, spec.magnify,
                    backend.get_num_threads())
    return y.derive(out, StackKind.STRETCHED)


def stretch_adjoint(ys: TiltStack, spec: StretchSpec) -> TiltStack:
    """Exact transpose of :func:`stretch` (same geometry, same dims)."""
    _check_dims(ys, spec)
    k = backend.kernels()
    out = k.stretch_adjoint(ys.data, spec.geometry.angles_rad, spec.magnify,
                            backend.get_num_threads())
    return TiltStack(out, ys.geometry, ys.kind)


def view_triplets(spec: StretchSpec, view: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(row, col, weight) triplets of one view's n_w x n_w column resampler.

    At most 2 nonzeros per output column; weights of in-range rows sum to 1.
    """
    n_w = spec.geometry.n_w
    theta = float(spec.geometry.angles_rad[view])
    cj = 0.5 * (n_w - 1)
    scale = np.cos(theta) if spec.magnify else 1.0 / np.cos(theta)
    rows, cols, weights = [], [], []
    for q in range(n_w):
        pos = (q - cj) * scale + cj
        if pos < 0.0 or pos > n_w - 1:
            continue
        lo = int(np.floor(pos))
        if lo >= n_w - 1:
            rows.append(q)
            cols.append(n_w - 1)
            weights.append(1.0)
            continue
        f = pos - lo
        rows.append(q)
        cols.append(lo)
        weights.append(1.0 - f)
        if f > 0.0:
            rows.append(q)
            cols.append(lo + 1)
            weights.append(f)
    return (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64),
            np.asarray(weights, dtype=np.float64))


def as_sparse_operator(spec: StretchSpec, dims: tuple[int, int, int]) -> sp.coo_matrix:
    """Explicit sparse matrix acting on a flattened (view, row, col) stack.

    Applying it to ``stack.ravel()`` equals :func:`stretch`.  The COO
    row/col/data arrays are the audit triplet list.
    """
    n_view, n_h, n_w = dims
    if (n_view, n_h, n_w) != (spec.geometry.n_view, spec.geometry.n_h, spec.geometry.n_w):
        raise ValueError(f"dims {dims} do not match spec geometry")
    rows, cols, weights = [], [], []
    for k in range(n_view):
        r, c, w = view_triplets(spec, k)
        for i in range(n_h):
            offset = (k * n_h + i) * n_w
            rows.append(r + offset)
            cols.append(c + offset)
            weights.append(w)
    n = n_view * n_h * n_w
    return sp.coo_matrix(
        (np.concatenate(weights), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
