"""Job and sweep configuration with JSON round-trip.

A ReconJobConfig pins every choice one reconstruction depends on (angles,
representation, augmentation, operator flags, seeds) so a run can be
replayed from the JSON the CLI drops next to its outputs.  A SweepConfig
is the evaluation matrix over representations x noise levels x
misalignment counts.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .phantom import PhantomSpec

DEFAULT_ANGLES = tuple(np.linspace(-60.0, 60.0, 8))

REPRESENTATIONS = ("sinogram", "stretch", "bp", "fbp", "identity")
NEURAL_REPRESENTATIONS = ("sinogram", "stretch")


@dataclass(frozen=True)
class ReconJobConfig:
    angles_deg: tuple[float, ...] = DEFAULT_ANGLES
    representation: str = "sinogram"
    noise_ratio: float = 0.3
    n_misaligned: int = 0
    shift_range: int = 3
    seed: int = 0
    path_weighting: bool = True
    direction: str = "magnify"
    pad_length: int | None = None
    delta_theta_rad: float | None = None
    per_view_normalize: bool = True
    n_d: int = 32
    input_path: str | None = None
    output_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "angles_deg", tuple(float(a) for a in self.angles_deg))
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {self.representation!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ReconJobConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class SweepConfig:
    representations: tuple[str, ...] = ("bp", "fbp")
    noise_levels: tuple[float, ...] = (0.0, 0.3)
    misalign_counts: tuple[int, ...] = (0,)
    angles_deg: tuple[float, ...] = DEFAULT_ANGLES
    patch_dims: tuple[int, int, int] = (32, 512, 512)
    volume_path: str | None = None
    phantom: PhantomSpec | None = None
    seed: int = 0
    shift_range: int = 3
    path_weighting: bool = True
    direction: str = "magnify"
    pad_length: int | None = None
    delta_theta_rad: float | None = None
    per_view_normalize: bool = True
    max_patches: int | None = None
    models: dict = field(default_factory=dict)  # representation -> checkpoint
    infer_cmd: str = "stretchtomo-trainer infer --in {inp} --out {out} --ckpt {ckpt}"

    def __post_init__(self):
        object.__setattr__(self, "representations", tuple(self.representations))
        object.__setattr__(self, "noise_levels", tuple(float(n) for n in self.noise_levels))
        object.__setattr__(self, "misalign_counts", tuple(int(m) for m in self.misalign_counts))
        object.__setattr__(self, "angles_deg", tuple(float(a) for a in self.angles_deg))
        object.__setattr__(self, "patch_dims", tuple(int(p) for p in self.patch_dims))
        for r in self.representations:
            if r not in REPRESENTATIONS:
                raise ValueError(f"unknown representation {r!r}")
        if self.volume_path is None and self.phantom is None:
            raise ValueError("sweep needs volume_path or a phantom spec")

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.phantom is not None:
            d["phantom"] = asdict(self.phantom)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        d = dict(d)
        if d.get("phantom") is not None:
            ph = dict(d["phantom"])
            ph["dims"] = tuple(ph["dims"])
            d["phantom"] = PhantomSpec(**ph)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown sweep config keys: {sorted(unknown)}")
        return cls(**d)


def save_config(cfg, path) -> None:
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_sweep_config(path) -> SweepConfig:
    with open(path) as fh:
        return SweepConfig.from_dict(json.load(fh))


def load_job_config(path) -> ReconJobConfig:
    with open(path) as fh:
        return ReconJobConfig.from_dict(json.load(fh))
