#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--views 8] [--size 256] [--depth 32]
"""
import argparse
import time

import numpy as np

from stretchtomo import backend
from stretchtomo.core import TiltGeometry, TiltStack, Volume
from stretchtomo.projector import ProjectorSpec, backproject, project
from stretchtomo.stretch import StretchSpec, stretch


def timeit(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--views", type=int, default=8)
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--depth", type=int, default=32)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    angles = tuple(np.linspace(-60.0, 60.0, args.views))
    geometry = TiltGeometry(angles, args.size, args.size)
    pspec = ProjectorSpec(geometry, args.depth)
    sspec = StretchSpec(geometry)
    vol = Volume(rng.standard_normal((args.depth, args.size, args.size)).astype(np.float32))
    stack = TiltStack(rng.standard_normal((args.views, args.size, args.size)).astype(np.float32),
                      geometry)

    cases = {
        "project": lambda: project(vol, pspec),
        "backproject": lambda: backproject(stack, pspec),
        "stretch": lambda: stretch(stack, sspec),
    }

    names = backend.available_backends()
    print(f"volume {vol.dims}, {args.views} views, threads={backend.get_num_threads()}")
    print(f"{'kernel':<12}" + "".join(f"{n:>12}" for n in names) + f"{'speedup':>10}")
    for label, fn in cases.items():
        times = {}
        for name in names:
            backend.set_backend(name)
            try:
                times[name] = timeit(fn, args.repeats)
            finally:
                backend.set_backend(None)
        row = f"{label:<12}" + "".join(f"{times[n]:>11.3f}s" for n in names)
        if "ext" in times and "python" in times:
            row += f"{times['python'] / times['ext']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
