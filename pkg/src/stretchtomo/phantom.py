"""Synthetic ground-truth volumes and patch sampling.

The "cells" style mimics membrane-rich tissue: space is partitioned by
seeded generator points, voxels near a partition boundary are darkened
(thin membranes), cell interiors get a per-cell base level plus smooth
texture.  The "blobs" style is a smooth sum of random Gaussians, handy for
reconstruction sanity checks.  Any user volume in the STTO format can be
fed to :func:`sample_patch` instead; nothing here is required for real data.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter
from scipy.spatial import cKDTree

from .core import Volume, normalize_zero_mean_unit_var


@dataclass(frozen=True)
class PhantomSpec:
    dims: tuple[int, int, int]
    style: str = "cells"  # "cells" | "blobs"
    cell_count: int = 20
    membrane_width_px: float = 1.2
    rng_seed: int = 0

    def __post_init__(self):
        if any(d < 1 for d in self.dims):
            raise ValueError("phantom dims must be positive")
        if self.cell_count < 1:
            raise ValueError("cell_count must be >= 1")
        if self.style not in ("cells", "blobs"):
            raise ValueError(f"unknown phantom style {self.style!r}")
        if self.membrane_width_px <= 0:
            raise ValueError("membrane_width_px must be positive")


@dataclass(frozen=True)
class PatchSpec:
    patch_dims: tuple[int, int, int] = (32, 512, 512)
    rng_seed: int = 0

    def __post_init__(self):
        if any(d < 1 for d in self.patch_dims):
            raise ValueError("patch dims must be positive")


def _grid_points(dims) -> np.ndarray:
    zz, yy, xx = np.meshgrid(*(np.arange(d, dtype=np.float64) for d in dims),
                             indexing="ij")
    return np.stack([zz.ravel(), yy.ravel(), xx.ravel()], axis=1)


def _cells(spec: PhantomSpec, rng: np.random.Generator) -> np.ndarray:
    dims = spec.dims
    centers = rng.uniform(low=0.0, high=np.asarray(dims, dtype=np.float64),
                          size=(spec.cell_count, 3))
    base = rng.uniform(0.35, 1.0, size=spec.cell_count)
    texture = gaussian_filter(rng.standard_normal(dims), sigma=3.0)
    texture /= max(texture.std(), 1e-12)

    vol = np.empty(dims, dtype=np.float64)
    pts = _grid_points(dims)
    if spec.cell_count == 1:
        vol[...] = base[0]
    else:
        tree = cKDTree(centers)
        dist, idx = tree.query(pts, k=2)
        # half the gap between nearest and second-nearest generator is the
        # distance to the bisector plane, i.e. to the partition boundary
        boundary_dist = 0.5 * (dist[:, 1] - dist[:, 0])
        membrane = (boundary_dist < spec.membrane_width_px).reshape(dims)
        vol[...] = base[idx[:, 0]].reshape(dims)
        vol[membrane] = -1.0
    vol += 0.15 * texture
    return vol


def _blobs(spec: PhantomSpec, rng: np.random.Generator) -> np.ndarray:
    dims = np.asarray(spec.dims, dtype=np.float64)
    vol = np.zeros(spec.dims, dtype=np.float64)
    zz, yy, xx = np.meshgrid(*(np.arange(d, dtype=np.float64) for d in spec.dims),
                             indexing="ij")
    for _ in range(spec.cell_count):
        center = rng.uniform(0.15, 0.85, size=3) * dims
        sigma = rng.uniform(0.06, 0.18, size=3) * dims
        amp = rng.uniform(0.4, 1.0)
        vol += amp * np.exp(
            -0.5 * (((zz - center[0]) / sigma[0]) ** 2
                    + ((yy - center[1]) / sigma[1]) ** 2
                    + ((xx - center[2]) / sigma[2]) ** 2)
        )
    return vol


def make_phantom(spec: PhantomSpec) -> Volume:
    """Deterministic synthetic volume, normalized to zero mean, unit var."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(spec.rng_seed)))
    vol = _cells(spec, rng) if spec.style == "cells" else _blobs(spec, rng)
    return Volume(normalize_zero_mean_unit_var(vol))


def sample_patch(v: Volume, spec: PatchSpec) -> Volume:
    """Uniformly random corner crop of patch_dims, normalized."""
    corner = sample_corner(v.dims, spec.patch_dims, spec.rng_seed)
    return crop_patch(v, corner, spec.patch_dims)


def sample_corner(vol_dims, patch_dims, seed: int) -> tuple[int, int, int]:
    for p, l in zip(patch_dims, vol_dims):
        if p > l:
            raise ValueError(f"patch dims {tuple(patch_dims)} exceed volume {tuple(vol_dims)}")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, 4))))
    return tuple(int(rng.integers(0, l - p + 1))
                 for p, l in zip(patch_dims, vol_dims))


def crop_patch(v: Volume, corner, patch_dims) -> Volume:
    sl = tuple(slice(c, c + p) for c, p in zip(corner, patch_dims))
    return Volume(normalize_zero_mean_unit_var(v.data[sl]))
