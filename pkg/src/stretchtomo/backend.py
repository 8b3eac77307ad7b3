"""Kernel backend selection.

The compiled extension (stretchtomo._kernels, Cython + OpenMP) is used when
importable; otherwise the numpy fallback takes over.  Selection can be
forced with the STRETCHTOMO_BACKEND environment variable ("ext" | "python" |
"auto") or programmatically via :func:`set_backend`.  Thread count comes
from STRETCHTOMO_THREADS, :func:`set_num_threads`, or the CPU count.
"""
from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels as _ext
except ImportError:  # pragma: no cover - build-dependent
    _ext = None

from .core import StretchtomoError

_forced: str | None = None
_num_threads: int | None = None


def available_backends() -> tuple[str, ...]:
    return ("ext", "python") if _ext is not None else ("python",)


def set_backend(name: str | None) -> None:
    """Force "ext" or "python", or None/"auto" to restore auto-selection."""
    global _forced
    if name in (None, "auto"):
        _forced = None
        return
    if name not in ("ext", "python"):
        raise StretchtomoError(f"unknown backend {name!r}")
    if name == "ext" and _ext is None:
        raise StretchtomoError("compiled extension not available")
    _forced = name


def get_backend_name() -> str:
    forced = _forced or os.environ.get("STRETCHTOMO_BACKEND", "auto")
    if forced == "python":
        return "python"
    if forced == "ext":
        if _ext is None:
            raise StretchtomoError("STRETCHTOMO_BACKEND=ext but extension missing")
        return "ext"
    return "ext" if _ext is not None else "python"


def kernels():
    return _ext if get_backend_name() == "ext" else _kernels_py


def set_num_threads(n: int | None) -> None:
    global _num_threads
    if n is not None and n < 1:
        raise StretchtomoError("thread count must be >= 1")
    _num_threads = n


def get_num_threads() -> int:
    # the environment variable outranks a --threads flag / set_num_threads
    env = os.environ.get("STRETCHTOMO_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise StretchtomoError(f"bad STRETCHTOMO_THREADS value {env!r}") from exc
        if n < 1:
            raise StretchtomoError("STRETCHTOMO_THREADS must be >= 1")
        return n
    if _num_threads is not None:
        return _num_threads
    return os.cpu_count() or 1
