"""Command-line entry point.

Every subcommand reads/writes STTO tensors (plus CSV/JSON/PNG where noted),
applies exactly one pipeline stage, and drops a fully resolved
``<out>.config.json`` next to its primary output so the run can be replayed.
Failures exit nonzero with a one-line message on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, backend
from .augment import AugmentSpec, augment_pipeline
from .config import (DEFAULT_ANGLES, ReconJobConfig, load_sweep_config,
                     save_config)
from .core import (StretchtomoError, TiltGeometry, TiltStack, Volume,
                   normalize_zero_mean_unit_var)
from .evaluation import mse, run_sweep
from .filters import FilterSpec, fbp, ramlak_filter
from .phantom import PhantomSpec, make_phantom
from .projector import ProjectorSpec, backproject, project
from .stretch import StretchSpec, as_sparse_operator, stretch
from .stto import read_tensor, write_tensor


def parse_angles(text: str) -> tuple[float, ...]:
    """Either "start:stop:count" (inclusive linspace) or "a,b,c"."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise StretchtomoError(f"bad angle range {text!r}, want start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise StretchtomoError("angle count must be >= 1")
        return tuple(np.linspace(start, stop, count))
    return tuple(float(a) for a in text.split(","))


def parse_dims(text: str) -> tuple[int, int, int]:
    dims = tuple(int(d) for d in text.split(","))
    if len(dims) != 3:
        raise StretchtomoError(f"bad dims {text!r}, want three comma-separated ints")
    return dims


def _emit_config(out_path: str, command: str, resolved: dict) -> None:
    payload = {"command": command, "version": __version__, **resolved}
    cfg_path = Path(str(out_path) + ".config.json")
    with open(cfg_path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_stack(path) -> TiltStack:
    t = read_tensor(path)
    if not isinstance(t, TiltStack):
        raise StretchtomoError(f"{path} holds a volume, expected a tilt stack")
    return t


def _read_volume(path) -> Volume:
    t = read_tensor(path)
    if not isinstance(t, Volume):
        raise StretchtomoError(f"{path} holds a tilt stack, expected a volume")
    return t


def cmd_phantom(args) -> int:
    spec = PhantomSpec(dims=parse_dims(args.dims), style=args.style,
                       cell_count=args.cells,
                       membrane_width_px=args.membrane_width,
                       rng_seed=args.seed)
    write_tensor(make_phantom(spec), args.out)
    _emit_config(args.out, "phantom", {
        "dims": list(spec.dims), "style": spec.style, "cells": spec.cell_count,
        "membrane_width": spec.membrane_width_px, "seed": spec.rng_seed,
        "out": str(args.out),
    })
    return 0


def cmd_project(args) -> int:
    vol = _read_volume(args.infile)
    angles = parse_angles(args.angles)
    geometry = TiltGeometry(angles, vol.dims[1], vol.dims[2])
    spec = ProjectorSpec(geometry, vol.dims[0], not args.no_path_weighting)
    write_tensor(project(vol, spec), args.out)
    _emit_config(args.out, "project", {
        "in": str(args.infile), "out": str(args.out),
        "angles_deg": list(angles), "path_weighting": spec.path_weighting,
        "threads": backend.get_num_threads(), "backend": backend.get_backend_name(),
    })
    return 0


def cmd_stretch(args) -> int:
    y = _read_stack(args.infile)
    spec = StretchSpec(y.geometry, direction=args.direction)
    write_tensor(stretch(y, spec), args.out)
    if args.triplet_csv:
        op = as_sparse_operator(spec, y.dims)
        with open(args.triplet_csv, "w") as fh:
            fh.write("row,col,weight\n")
            for r, c, w in zip(op.row, op.col, op.data):
                fh.write(f"{r},{c},{w:.17g}\n")
    _emit_config(args.out, "stretch", {
        "in": str(args.infile), "out": str(args.out),
        "direction": args.direction,
        "angles_deg": list(y.geometry.angles_deg),
    })
    return 0


def cmd_augment(args) -> int:
    y = _read_stack(args.infile)
    spec = AugmentSpec(noise_ratio=args.noise, n_misaligned=args.misalign,
                       shift_range=args.shift_range, rng_seed=args.seed,
                       per_view_normalize=not args.no_per_view_normalize)
    out, log = augment_pipeline(y, spec)
    write_tensor(out, args.out)
    log_path = args.shift_log or str(args.out) + ".shifts.json"
    with open(log_path, "w") as fh:
        json.dump(log, fh, indent=2)
        fh.write("\n")
    _emit_config(args.out, "augment", {
        "in": str(args.infile), "out": str(args.out), "noise": spec.noise_ratio,
        "misalign": spec.n_misaligned, "shift_range": spec.shift_range,
        "seed": spec.rng_seed, "per_view_normalize": spec.per_view_normalize,
        "shift_log": str(log_path),
    })
    return 0


def cmd_filter(args) -> int:
    y = _read_stack(args.infile)
    spec = FilterSpec(pad_length=args.pad)
    write_tensor(ramlak_filter(y, spec), args.out)
    _emit_config(args.out, "filter", {
        "in": str(args.infile), "out": str(args.out),
        "pad_length": spec.resolve_pad(y.dims[2]),
    })
    return 0


def _recon_specs(args, y: TiltStack):
    pspec = ProjectorSpec(y.geometry, args.depth, not args.no_path_weighting)
    fspec = FilterSpec(pad_length=args.pad, delta_theta_rad=args.norm)
    return pspec, fspec


def cmd_bp(args) -> int:
    y = _read_stack(args.infile)
    pspec, _ = _recon_specs(args, y)
    write_tensor(backproject(y, pspec), args.out)
    _emit_config(args.out, "bp", {
        "in": str(args.infile), "out": str(args.out), "depth": args.depth,
        "path_weighting": pspec.path_weighting,
        "threads": backend.get_num_threads(), "backend": backend.get_backend_name(),
    })
    return 0


def cmd_fbp(args) -> int:
    y = _read_stack(args.infile)
    pspec, fspec = _recon_specs(args, y)
    write_tensor(fbp(y, fspec, pspec), args.out)
    _emit_config(args.out, "fbp", {
        "in": str(args.infile), "out": str(args.out), "depth": args.depth,
        "path_weighting": pspec.path_weighting,
        "pad_length": fspec.resolve_pad(y.dims[2]),
        "normalization": fspec.resolve_normalization(y.geometry),
        "threads": backend.get_num_threads(), "backend": backend.get_backend_name(),
    })
    return 0


def cmd_slice(args) -> int:
    from PIL import Image

    t = read_tensor(args.infile)
    data = t.data
    if args.plane == "xtheta":
        if not isinstance(t, TiltStack):
            raise StretchtomoError("xtheta slice needs a tilt stack input")
        img = data[:, args.row, :]
    elif args.plane == "xy":
        img = data[args.view]  # view index for stacks, z index for volumes
    else:
        raise StretchtomoError(f"unknown plane {args.plane!r}")
    lo, hi = float(img.min()), float(img.max())
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    img8 = np.clip((img - lo) * scale, 0, 255).astype(np.uint8)
    Image.fromarray(img8, mode="L").save(args.out)
    _emit_config(args.out, "slice", {
        "in": str(args.infile), "out": str(args.out), "plane": args.plane,
        "row": args.row, "view": args.view, "min": lo, "max": hi,
    })
    return 0


def cmd_sweep(args) -> int:
    cfg = load_sweep_config(args.config)
    progress = None
    if args.verbose:
        def progress(rep, noise, n_mis, p, n):
            print(f"[{rep} noise={noise:g} mis={n_mis}] patch {p + 1}/{n}",
                  file=sys.stderr)
    report = run_sweep(cfg, progress=progress)
    report.to_csv(str(args.out) + ".csv")
    report.to_json(str(args.out) + ".json")
    save_config(cfg, str(args.out) + ".config.json")
    return 0


def cmd_mse(args) -> int:
    a, b = _read_volume(args.a), _read_volume(args.b)
    if args.normalize:
        a = Volume(normalize_zero_mean_unit_var(a.data))
        b = Volume(normalize_zero_mean_unit_var(b.data))
    print(f"{mse(a, b):.12g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="stretchtomo",
        description="Limited-angle tomography pipeline: phantoms, projection, "
                    "stretching, augmentation, classical reconstruction, sweeps.",
    )
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--threads", type=int, default=None,
                    help="worker threads for compiled kernels "
                         "(STRETCHTOMO_THREADS overrides)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate a synthetic volume")
    p.add_argument("--style", choices=("cells", "blobs"), default="cells")
    p.add_argument("--dims", default="32,512,512", help="n_d,n_h,n_w")
    p.add_argument("--cells", type=int, default=20)
    p.add_argument("--membrane-width", type=float, default=1.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("project", help="forward-project a volume")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--angles", default="-60:60:8",
                   help="start:stop:count (inclusive) or comma list")
    p.add_argument("--no-path-weighting", action="store_true")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("stretch", help="stretch each view by sec(theta)")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--direction", choices=("magnify", "compress"),
                   default="magnify")
    p.add_argument("--triplet-csv", default=None,
                   help="also export the sparse operator as row,col,weight CSV")
    p.set_defaults(func=cmd_stretch)

    p = sub.add_parser("augment", help="noise + misalignment + per-view norm")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--misalign", type=int, default=0)
    p.add_argument("--shift-range", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-per-view-normalize", action="store_true")
    p.add_argument("--shift-log", default=None)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("filter", help="ram-lak filter each detector row")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pad", type=int, default=None)
    p.set_defaults(func=cmd_filter)

    for name, fn, help_text in (("bp", cmd_bp, "plain backprojection"),
                                ("fbp", cmd_fbp, "filtered backprojection")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--in", dest="infile", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--depth", type=int, default=32)
        p.add_argument("--no-path-weighting", action="store_true")
        p.add_argument("--pad", type=int, default=None)
        p.add_argument("--norm", type=float, default=None)
        p.set_defaults(func=fn)

    p = sub.add_parser("slice", help="export a grayscale PNG slice")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--plane", choices=("xtheta", "xy"), required=True)
    p.add_argument("--row", type=int, default=0)
    p.add_argument("--view", type=int, default=0)
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("sweep", help="run an evaluation sweep from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output prefix for csv/json")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mse", help="mean squared error between two volumes")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--normalize", action="store_true",
                   help="normalize both volumes before comparing")
    p.set_defaults(func=cmd_mse)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        backend.set_num_threads(args.threads)
    try:
        return args.func(args)
    except (StretchtomoError, ValueError, OSError) as exc:
        print(f"stretchtomo {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
