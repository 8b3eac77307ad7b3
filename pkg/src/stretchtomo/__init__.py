"""Parallel-beam limited-angle tomography toolkit with stretched-sinogram
preprocessing, classical BP/FBP baselines, seeded augmentation and a
patchwise evaluation harness."""

__version__ = "0.1.0"

from .core import (StackKind, StretchtomoError, TiltGeometry, TiltStack,
                   Volume, index_to_natural, natural_to_index,
                   normalize_zero_mean_unit_var)
from .stto import SttoFormatError, read_tensor, write_tensor

__all__ = [
    "StackKind",
    "StretchtomoError",
    "SttoFormatError",
    "TiltGeometry",
    "TiltStack",
    "Volume",
    "index_to_natural",
    "natural_to_index",
    "normalize_zero_mean_unit_var",
    "read_tensor",
    "write_tensor",
    "__version__",
]
