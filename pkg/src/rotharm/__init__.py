"""Rotation-equivariant harmonic analysis on the sphere, SO(3) and finite rotation groups."""

from .core import RotationZYZ, SphericalSignal, Spectrum, make_grid, random_spectrum
from .sft import sft_forward, sft_forward_sepvars, sft_inverse

__version__ = "0.1.0"

__all__ = [
    "RotationZYZ", "SphericalSignal", "Spectrum", "make_grid", "random_spectrum",
    "sft_forward", "sft_forward_sepvars", "sft_inverse",
]
