"""Evaluation protocol: tile the test volume, run a reconstruction path on
every patch, aggregate per-patch MSE into mean +- standard error.

Tiling corners step by the patch length and the final corner is pulled
back to L - P, so the tiles cover everything and overlap only in a sliver
at the far edge.  Per-patch randomness derives from (sweep seed, patch
index), making cells comparable and the whole sweep order-independent.
"""
from __future__ import annotations

import itertools
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .augment import AugmentSpec, augment_pipeline
from .config import NEURAL_REPRESENTATIONS, SweepConfig
from .core import (StackKind, StretchtomoError, TiltGeometry, TiltStack,
                   Volume, normalize_zero_mean_unit_var)
from .filters import FilterSpec, fbp
from .phantom import crop_patch, make_phantom
from .projector import ProjectorSpec, backproject, project
from .stretch import StretchSpec, stretch
from .stto import read_tensor, write_tensor


@dataclass(frozen=True)
class TilingPlan:
    vol_dims: tuple[int, int, int]
    patch_dims: tuple[int, int, int]
    corners: tuple[tuple[int, int, int], ...]

    @property
    def n_patches(self) -> int:
        return len(self.corners)

    def axis_overlap(self) -> tuple[int, int, int]:
        """Per-axis overlap width, confined to the final corner."""
        return tuple(
            max(0, -(-l // p) * p - l) for l, p in zip(self.vol_dims, self.patch_dims)
        )


def _axis_corners(length: int, patch: int) -> list[int]:
    if patch > length:
        raise ValueError(f"patch length {patch} exceeds axis length {length}")
    corners = list(range(0, length - patch + 1, patch))
    if corners[-1] != length - patch:
        corners.append(length - patch)
    return corners


def plan_tiling(vol_dims, patch_dims) -> TilingPlan:
    """Cover the volume with patch-sized tiles, last tile pulled back."""
    per_axis = [_axis_corners(l, p) for l, p in zip(vol_dims, patch_dims)]
    corners = tuple(itertools.product(*per_axis))
    return TilingPlan(tuple(vol_dims), tuple(patch_dims), corners)


def mse(a: Volume, b: Volume) -> float:
    """Mean squared difference over all voxels, accumulated in float64."""
    if a.dims != b.dims:
        raise ValueError(f"dims mismatch {a.dims} vs {b.dims}")
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    return float(np.mean(diff * diff))


@dataclass
class SweepRow:
    representation: str
    noise: float
    n_misaligned: int
    patch_mses: list[float]

    @property
    def mean(self) -> float:
        return float(np.mean(self.patch_mses))

    @property
    def stderr(self) -> float:
        n = len(self.patch_mses)
        if n < 2:
            return 0.0
        return float(np.std(self.patch_mses, ddof=1) / np.sqrt(n))


@dataclass
class MetricsReport:
    rows: list[SweepRow]
    metadata: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        lines = ["path,noise,n_misaligned,n_patches,mse_mean,mse_stderr"]
        for r in self.rows:
            lines.append(
                f"{r.representation},{r.noise:.9g},{r.n_misaligned},"
                f"{len(r.patch_mses)},{r.mean:.9g},{r.stderr:.9g}"
            )
        Path(path).write_text("\n".join(lines) + "\n")

    def to_json(self, path) -> None:
        import json

        payload = {
            "metadata": self.metadata,
            "rows": [
                {
                    "path": r.representation,
                    "noise": r.noise,
                    "n_misaligned": r.n_misaligned,
                    "n_patches": len(r.patch_mses),
                    "mse_mean": r.mean,
                    "mse_stderr": r.stderr,
                    "patch_mses": r.patch_mses,
                }
                for r in self.rows
            ],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")


def _patch_seed(sweep_seed: int, patch_index: int) -> int:
    return int(np.random.SeedSequence((sweep_seed, patch_index)).generate_state(1)[0])


def _run_infer(cfg: SweepConfig, representation: str, stack: TiltStack,
               workdir: Path, tag: str) -> Volume:
    ckpt = cfg.models.get(representation)
    if ckpt is None or not Path(ckpt).exists():
        raise StretchtomoError(
            f"representation {representation!r} needs a model checkpoint; "
            f"missing file: {ckpt}"
        )
    inp = workdir / f"{tag}_in.stto"
    out = workdir / f"{tag}_out.stto"
    write_tensor(stack, inp)
    cmd = cfg.infer_cmd.format(inp=inp, out=out, ckpt=ckpt)
    proc = subprocess.run(shlex.split(cmd), capture_output=True, text=True)
    if proc.returncode != 0:
        raise StretchtomoError(f"inference command failed: {cmd}\n{proc.stderr}")
    vol = read_tensor(out)
    if not isinstance(vol, Volume):
        raise StretchtomoError("inference output is not a volume")
    return vol


def _reconstruct(cfg: SweepConfig, representation: str, gt: Volume,
                 aug: TiltStack, pspec: ProjectorSpec, workdir: Path,
                 tag: str) -> Volume:
    if representation == "identity":
        return gt
    if representation == "bp":
        return backproject(aug, pspec)
    if representation == "fbp":
        fspec = FilterSpec(pad_length=cfg.pad_length,
                           delta_theta_rad=cfg.delta_theta_rad)
        return fbp(aug, fspec, pspec)
    if representation == "sinogram":
        return _run_infer(cfg, representation, aug, workdir, tag)
    if representation == "stretch":
        sspec = StretchSpec(aug.geometry, direction=cfg.direction)
        return _run_infer(cfg, representation, stretch(aug, sspec), workdir, tag)
    raise StretchtomoError(f"unknown representation {representation!r}")


def load_test_volume(cfg: SweepConfig) -> Volume:
    if cfg.volume_path is not None:
        t = read_tensor(cfg.volume_path)
        if not isinstance(t, Volume):
            raise StretchtomoError(f"{cfg.volume_path} does not hold a volume")
        return t
    return make_phantom(cfg.phantom)


def run_sweep(cfg: SweepConfig, progress=None) -> MetricsReport:
    """Evaluate every (representation, noise, misalignment) grid cell.

    Neural representations are checked for their model files up front so a
    long classical run cannot die halfway through on a typo.
    """
    for r in cfg.representations:
        if r in NEURAL_REPRESENTATIONS:
            ckpt = cfg.models.get(r)
            if ckpt is None or not Path(ckpt).exists():
                raise StretchtomoError(
                    f"representation {r!r} needs a model checkpoint; "
                    f"missing file: {ckpt}"
                )

    vol = load_test_volume(cfg)
    plan = plan_tiling(vol.dims, cfg.patch_dims)
    corners = plan.corners
    if cfg.max_patches is not None:
        corners = corners[: cfg.max_patches]

    geometry = TiltGeometry(cfg.angles_deg, cfg.patch_dims[1], cfg.patch_dims[2])
    pspec = ProjectorSpec(geometry, cfg.patch_dims[0], cfg.path_weighting)

    rows: list[SweepRow] = []
    with tempfile.TemporaryDirectory(prefix="stretchtomo_sweep_") as tmp:
        workdir = Path(tmp)
        for representation in cfg.representations:
            for noise in cfg.noise_levels:
                for n_mis in cfg.misalign_counts:
                    mses = []
                    for p_idx, corner in enumerate(corners):
                        try:
                            mses.append(
                                evaluate_patch(cfg, representation, noise, n_mis,
                                               vol, corner, p_idx, pspec, workdir)
                            )
                        except StretchtomoError:
                            raise
                        except Exception as exc:
                            raise StretchtomoError(
                                f"patch {p_idx} (corner {corner}) failed in cell "
                                f"({representation}, noise={noise}, n_mis={n_mis}): {exc}"
                            ) from exc
                        if progress is not None:
                            progress(representation, noise, n_mis, p_idx, len(corners))
                    rows.append(SweepRow(representation, noise, n_mis, mses))

    return MetricsReport(rows=rows, metadata={
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "n_patches": len(corners),
        "version": __version__,
    })


def evaluate_patch(cfg: SweepConfig, representation: str, noise: float,
                   n_mis: int, vol: Volume, corner, patch_index: int,
                   pspec: ProjectorSpec, workdir: Path) -> float:
    """Project, augment, transform and score a single ground-truth patch."""
    gt = crop_patch(vol, corner, cfg.patch_dims)
    y = project(gt, pspec)
    aspec = AugmentSpec(
        noise_ratio=noise,
        n_misaligned=n_mis,
        shift_range=cfg.shift_range,
        rng_seed=_patch_seed(cfg.seed, patch_index),
        per_view_normalize=cfg.per_view_normalize,
    )
    aug, _ = augment_pipeline(y, aspec)
    tag = f"{representation}_{noise:g}_{n_mis}_{patch_index}"
    recon = _reconstruct(cfg, representation, gt, aug, pspec, workdir, tag)
    if recon.dims != gt.dims:
        raise StretchtomoError(
            f"reconstruction dims {recon.dims} do not match patch {gt.dims}"
        )
    if recon is not gt:  # identity path scores the patch as-is
        recon = Volume(normalize_zero_mean_unit_var(recon.data))
    return mse(gt, recon)
