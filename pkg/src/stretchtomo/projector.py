"""Discrete parallel-beam projection around the y tilt axis, and its adjoint.

Geometry: a ray hitting the detector at centered column coordinate u under
tilt theta crosses depth slice zeta at in-plane coordinate
``u*sec(theta) + zeta*tan(theta)`` (centered pixel units).  The projector
sums that slice-by-slice sample (linear interpolation along x, zero once the
ray leaves the slab) and, with path weighting on, scales the sum by
sec(theta) to account for the longer path per unit depth.  Rows are
independent because the tilt axis runs along them.

``backproject`` is the exact transpose of the linear map ``project``
realizes; the inner-product identity is what the tests pin down.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .core import StackKind, TiltGeometry, TiltStack, Volume


@dataclass(frozen=True)
class ProjectorSpec:
    geometry: TiltGeometry
    n_d: int
    path_weighting: bool = True

    def __post_init__(self):
        if self.n_d < 1:
            raise ValueError("volume depth must be positive")

    @property
    def vol_dims(self) -> tuple[int, int, int]:
        return (self.n_d, self.geometry.n_h, self.geometry.n_w)


def project(x: Volume, spec: ProjectorSpec) -> TiltStack:
    """Forward-project a volume into a raw tilt stack."""
    if x.dims != spec.vol_dims:
        raise ValueError(f"volume dims {x.dims} do not match spec {spec.vol_dims}")
    k = backend.kernels()
    out = k.project(x.data, spec.geometry.angles_rad, spec.path_weighting,
                    backend.get_num_threads())
    return TiltStack(out, spec.geometry, StackKind.RAW)


def backproject(y: TiltStack, spec: ProjectorSpec) -> Volume:
    """Apply the exact adjoint of :func:`project` to a tilt stack."""
    if y.geometry.angles_deg != spec.geometry.angles_deg:
        raise ValueError("stack angles do not match projector spec")
    if y.dims != (spec.geometry.n_view, spec.geometry.n_h, spec.geometry.n_w):
        raise ValueError(f"stack dims {y.dims} do not match spec geometry")
    k = backend.kernels()
    out = k.backproject(y.data, spec.geometry.angles_rad, spec.path_weighting,
                        spec.n_d, backend.get_num_threads())
    return Volume(out)
