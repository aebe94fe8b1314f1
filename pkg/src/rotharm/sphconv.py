"""Spectral convolution with zonal filters, pooling and invariant descriptors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SphericalSignal, Spectrum, check_bandwidth, make_grid


@dataclass(frozen=True)
class ZonalFilter:
    """Order-0 coefficients ``k_0^l`` of a real zonal filter, ``l = 0..b-1``."""

    k0: np.ndarray

    def __post_init__(self):
        k0 = np.asarray(self.k0, float).ravel()
        if k0.size < 1:
            raise ValueError("zonal filter needs at least one degree")
        if not np.all(np.isfinite(k0)):
            raise ValueError("zonal filter values must be finite")
        object.__setattr__(self, "k0", k0)

    @property
    def b(self) -> int:
        return self.k0.size

    @classmethod
    def from_spectrum(cls, k: Spectrum, channel: int = 0) -> "ZonalFilter":
        """Keep only the ``m = 0`` column of a full filter spectrum."""
        ells = np.arange(k.b)
        return cls(k.coeffs[channel, ells * ells + ells].real)


@dataclass(frozen=True)
class AnchorFilter:
    """Filter values stored at a few degrees and linearly interpolated in between."""

    anchor_degrees: np.ndarray
    anchor_values: np.ndarray

    def __post_init__(self):
        deg = np.asarray(self.anchor_degrees, int).ravel()
        val = np.asarray(self.anchor_values, float).ravel()
        if deg.size != val.size:
            raise ValueError("anchor degrees and values differ in length")
        if deg.size < 2:
            raise ValueError("need at least two anchors")
        if np.any(np.diff(deg) <= 0):
            raise ValueError("anchor degrees must be strictly increasing")
        object.__setattr__(self, "anchor_degrees", deg)
        object.__setattr__(self, "anchor_values", val)

    @property
    def n_anchors(self) -> int:
        return self.anchor_degrees.size

    @classmethod
    def uniform(cls, b: int, values) -> "AnchorFilter":
        """Anchors at ``len(values)`` evenly spread degrees from 0 to ``b-1``."""
        values = np.asarray(values, float)
        deg = np.rint(np.linspace(0, b - 1, values.size)).astype(int)
        return cls(deg, values)


def expand_anchors(af: AnchorFilter, b: int) -> ZonalFilter:
    b = check_bandwidth(b)
    deg = af.anchor_degrees
    if deg[0] < 0 or deg[-1] > b - 1:
        raise ValueError(f"anchor degrees must lie in [0, {b - 1}]")
    return ZonalFilter(np.interp(np.arange(b), deg, af.anchor_values))


def conv_gains(b: int) -> np.ndarray:
    """Per-degree factor ``2 pi sqrt(4 pi / (2l+1))`` of the convolution theorem."""
    ells = np.arange(b)
    return 2 * np.pi * np.sqrt(4 * np.pi / (2 * ells + 1))


def conv(f: Spectrum, k: ZonalFilter) -> Spectrum:
    """Spherical convolution ``(f * k)_m^l = 2 pi sqrt(4 pi/(2l+1)) f_m^l k_0^l``."""
    if f.b != k.b:
        raise ValueError(f"bandwidth mismatch: signal {f.b}, filter {k.b}")
    gain = conv_gains(f.b) * k.k0
    ells = np.repeat(np.arange(f.b), 2 * np.arange(f.b) + 1)
    return Spectrum(f.coeffs * gain[ells], f.spin)


def conv_multi(f: Spectrum, k0: np.ndarray) -> Spectrum:
    """Channel-mixing convolution, ``k0`` has shape ``(C_in, C_out, b)``."""
    k0 = np.asarray(k0, float)
    if k0.shape[0] != f.channels or k0.shape[2] != f.b:
        raise ValueError(f"filter shape {k0.shape} does not match {f.channels} channels, b={f.b}")
    gain = conv_gains(f.b)[None, None, :] * k0
    ells = np.repeat(np.arange(f.b), 2 * np.arange(f.b) + 1)
    return Spectrum(np.einsum("ck,cok->ok", f.coeffs, gain[:, :, ells]), f.spin)


def spectral_pool(f: Spectrum) -> Spectrum:
    """Keep degrees ``l < b/2``."""
    if f.b % 2:
        raise ValueError(f"spectral pooling needs even bandwidth, got {f.b}")
    h = f.b // 2
    return Spectrum(f.coeffs[:, : h * h].copy(), f.spin)


def _as_data(sig) -> np.ndarray:
    return (sig if isinstance(sig, SphericalSignal) else SphericalSignal(np.asarray(sig))).data


def weighted_avg_pool(sig) -> SphericalSignal:
    """2x downsample; each output is the ``sin(theta)``-weighted mean of a 2x2 block."""
    data = _as_data(sig)
    n = data.shape[1]
    if n < 4 or n % 4:
        raise ValueError(f"weighted average pooling needs resolution >= 4 divisible by 4, got {n}")
    w = np.sin(make_grid(n // 2).thetas)
    wb = w.reshape(-1, 2)
    den = wb.sum(axis=1)
    # ring blocks whose weights are all zero cannot occur: only theta=0 has sin 0
    blocks = data.reshape(data.shape[0], n // 2, 2, n // 2, 2)
    num = np.einsum("cjakb,ja->cjk", blocks, wb)
    return SphericalSignal(num / (2.0 * den[None, :, None]))


def max_pool(sig) -> SphericalSignal:
    """Plain 2x2 max pooling on the grid (reference point for equivariance error)."""
    data = _as_data(sig)
    n = data.shape[1]
    if n < 4 or n % 4:
        raise ValueError(f"max pooling needs resolution >= 4 divisible by 4, got {n}")
    blocks = data.reshape(data.shape[0], n // 2, 2, n // 2, 2)
    return SphericalSignal(blocks.max(axis=(2, 4)))


def wgap(sig) -> np.ndarray:
    """Weighted global average pooling, weight ``sin(theta)`` per sample."""
    data = _as_data(sig)
    w = np.sin(make_grid(data.shape[1] // 2).thetas)
    return np.einsum("cjk,j->c", data, w) / (w.sum() * data.shape[2])


def magl(spec: Spectrum) -> np.ndarray:
    """Norm of each degree block, shape ``(C, b)``; a single channel gives ``(b,)``."""
    out = np.stack([np.linalg.norm(spec.degree(ell), axis=1) for ell in range(spec.b)], axis=1)
    return out[0] if spec.channels == 1 else out


def magnitude_relu(sig, bias: float = 0.0) -> SphericalSignal:
    """Pointwise ``max(|f| + bias, 0)``; breaks band limits, so equivariance becomes approximate."""
    data = _as_data(sig)
    return SphericalSignal(np.maximum(np.abs(data) + bias, 0.0))

