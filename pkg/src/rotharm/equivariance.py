"""Equivariance-error measurement for small spherical pipelines.

A pipeline is a comma-separated list of stages acting on spectra:

``conv``     zonal spectral convolution with a fixed random filter
``spool``    spectral pooling (drop degrees ``>= b/2``)
``mag``      pointwise ``|f|`` on the grid, transformed back at the same b
``relu``     pointwise ``max(f, 0)`` on the grid
``wap``      weighted average pooling on the grid, transformed at ``b/2``
``maxpool``  2x2 max pooling on the grid, transformed at ``b/2``

For each random rotation ``g`` the error after every stage is
``||Phi(R f) - R Phi(f)|| / ||R Phi(f)||`` with rotations applied to
coefficients, so band-limited stages are compared without resampling error.
"""

from __future__ import annotations

import numpy as np

from .core import RotationZYZ, SphericalSignal, Spectrum, random_spectrum
from .sft import sft_forward_sepvars, sft_inverse
from .sphconv import ZonalFilter, conv, max_pool, spectral_pool, weighted_avg_pool
from .wigner import rotate_spectrum

STAGES = ("conv", "spool", "mag", "relu", "wap", "maxpool")
LINEAR_STAGES = {"conv", "spool"}


def parse_pipeline(spec: str) -> list[str]:
    names = [s.strip() for s in spec.split(",") if s.strip()]
    if not names:
        raise ValueError("empty pipeline")
    bad = [s for s in names if s not in STAGES]
    if bad:
        raise ValueError(f"unknown pipeline stages {bad}; choose from {', '.join(STAGES)}")
    return names


def _stage(name: str, rng: np.random.Generator):
    filters: dict = {}

    def run(x: Spectrum) -> Spectrum:
        b = x.b
        if name == "conv":
            if b not in filters:
                filters[b] = ZonalFilter(rng.standard_normal(b))
            return conv(x, filters[b])
        if name == "spool":
            return spectral_pool(x)
        sig = sft_inverse(x, real=True)
        if name == "mag":
            return sft_forward_sepvars(SphericalSignal(np.abs(sig.data)))
        if name == "relu":
            return sft_forward_sepvars(SphericalSignal(np.maximum(sig.data, 0.0)))
        if name == "wap":
            return sft_forward_sepvars(weighted_avg_pool(sig))
        return sft_forward_sepvars(max_pool(sig))

    return run


def build_pipeline(spec: str, seed: int = 0):
    rng = np.random.default_rng(seed)
    names = parse_pipeline(spec)
    return names, [_stage(n, rng) for n in names]


def _rel(a: Spectrum, b: Spectrum) -> float:
    den = np.linalg.norm(b.coeffs)
    num = np.linalg.norm(a.coeffs - b.coeffs)
    return float(num / den) if den > 0 else float(num)


def equivariance_report(spec: str, b: int = 32, trials: int = 20, seed: int = 0,
                        channels: int = 1) -> dict:
    """Mean and max relative error after each stage over ``trials`` rotations."""
    if trials < 1:
        raise ValueError("need at least one trial")
    names, stages = build_pipeline(spec, seed)
    rng = np.random.default_rng(seed + 1)
    errs = np.zeros((trials, len(stages)))
    for t in range(trials):
        f = random_spectrum(b, rng, channels)
        g = RotationZYZ.random(rng)
        x, y = f, rotate_spectrum(f, g)
        for s, stage in enumerate(stages):
            x, y = stage(x), stage(y)
            errs[t, s] = _rel(y, rotate_spectrum(x, g))
    return {
        "pipeline": ",".join(names),
        "bandwidth": b,
        "trials": trials,
        "seed": seed,
        "stages": [{"stage": n, "mean_rel_error": float(errs[:, i].mean()),
                    "max_rel_error": float(errs[:, i].max())} for i, n in enumerate(names)],
        "mean_rel_error": float(errs[:, -1].mean()),
        "linear": all(n in LINEAR_STAGES for n in names),
    }
