"""Spherical Fourier transforms on the equiangular ``2b x 2b`` grid.

Forward: ``f_m^l = sum_j cell_j sum_k f(theta_j, phi_k) conj(Y_m^l(theta_j, phi_k))``
with ``cell_j = (pi / b) w_j`` and ``w_j`` the exact ring weights.
"""

from __future__ import annotations

import numpy as np

from .core import (
    RotationZYZ,
    SphericalSignal,
    Spectrum,
    _readonly,
    check_bandwidth,
    make_grid,
    map_channels,
    once_per_key,
    quadrature_weights,
)
from .wigner import normalized_legendre, rotate_spectrum, sph_harm_all


@once_per_key
def legendre_grid_table(b_grid: int, lmax: int) -> np.ndarray:
    """``lam[m, l, j]`` at the colatitudes of the ``2 b_grid`` grid (cached, read-only)."""
    thetas = make_grid(b_grid).thetas
    lam = normalized_legendre(lmax, np.cos(thetas))
    return _readonly(lam)


@once_per_key
def _order_layout(b: int):
    # flat coefficient index and (|m|, l) table position for every coefficient
    ells = np.concatenate([np.full(2 * l + 1, l) for l in range(b)])
    ms = np.concatenate([np.arange(-l, l + 1) for l in range(b)])
    sign = np.where(ms < 0, (-1.0) ** ms, 1.0)
    return _readonly(ells), _readonly(ms), _readonly(sign)


def _as_signal(sig) -> SphericalSignal:
    return sig if isinstance(sig, SphericalSignal) else SphericalSignal(np.asarray(sig))


# ---------------------------------------------------------------------------
# forward transforms


def _direct_one(f: np.ndarray, b: int) -> np.ndarray:
    grid = make_grid(b)
    lam = legendre_grid_table(b, b - 1)
    fw = f * quadrature_weights(b).cell[:, None]
    out = np.empty(b * b, complex)
    for ell in range(b):
        ms = np.arange(-ell, ell + 1)
        sign = np.where(ms < 0, (-1.0) ** ms, 1.0)
        # conj(Y_m^l)(theta_j, phi_k) for all m of this degree
        ylm = (sign[:, None, None] * lam[np.abs(ms), ell][:, :, None]
               * np.exp(-1j * ms[:, None, None] * grid.phis[None, None, :]))
        out[ell * ell:(ell + 1) ** 2] = np.tensordot(ylm, fw, axes=([1, 2], [0, 1]))
    return out


def sft_forward(sig, workers: int = 1) -> Spectrum:
    """Direct quadrature transform, one harmonic at a time, O(b^4)."""
    sig = _as_signal(sig)
    b = sig.b
    return Spectrum(map_channels(lambda f: _direct_one(f, b), sig.data, workers))


def _sepvars_one(f: np.ndarray, b: int, real: bool) -> np.ndarray:
    lam = legendre_grid_table(b, b - 1)
    cell = quadrature_weights(b).cell
    ells, ms, sign = _order_layout(b)
    if real:
        # only orders m >= 0 are computed, negatives follow from symmetry
        F = np.fft.rfft(f, axis=1)[:, :b] * cell[:, None]
        A = np.einsum("jm,mlj->ml", F, lam)
        pos = ms >= 0
        out = np.empty(b * b, complex)
        out[pos] = A[ms[pos], ells[pos]]
        neg = ~pos
        out[neg] = (-1.0) ** ms[neg] * np.conj(A[-ms[neg], ells[neg]])
        return out
    F = np.fft.fft(f, axis=1) * cell[:, None]
    # orders 0..b-1 and -(b-1)..-1 in FFT bin layout
    Fp = F[:, :b]
    Fn = F[:, -1:-b:-1] if b > 1 else F[:, :0]
    Ap = np.einsum("jm,mlj->ml", Fp, lam)
    An = np.einsum("jm,mlj->ml", Fn, lam[1:])
    out = np.empty(b * b, complex)
    pos = ms >= 0
    out[pos] = Ap[ms[pos], ells[pos]]
    neg = ~pos
    out[neg] = sign[neg] * An[-ms[neg] - 1, ells[neg]]
    return out


def sft_forward_sepvars(sig, workers: int = 1) -> Spectrum:
    """Row FFT followed by a Legendre matrix product per order, O(b^3).

    Real input takes the half-spectrum route (``rfft``, ``m >= 0`` only).
    """
    sig = _as_signal(sig)
    b = sig.b
    real = sig.is_real
    return Spectrum(map_channels(lambda f: _sepvars_one(f, b, real), sig.data, workers))


def sft_forward_general(sig, workers: int = 1) -> Spectrum:
    """Separated transform that ignores realness (for cross-checks)."""
    sig = _as_signal(sig)
    b = sig.b
    data = sig.data.astype(complex)
    return Spectrum(map_channels(lambda f: _sepvars_one(f, b, False), data, workers))


# ---------------------------------------------------------------------------
# inverse transform


def _inverse_one(c: np.ndarray, b: int, b_out: int, real: bool) -> np.ndarray:
    lam = legendre_grid_table(b_out, b - 1)
    n = 2 * b_out
    G = np.zeros((n, n), complex)
    for m in range(-(b - 1), b):
        am = abs(m)
        ell = np.arange(am, b)
        coef = c[ell * ell + ell + m]
        if m < 0:
            coef = coef * (-1.0) ** m
        G[:, m % n] = lam[am, am:b].T @ coef
    if real:
        return np.fft.irfft(G[:, : b_out + 1], n=n, axis=1) * n
    return np.fft.ifft(G, axis=1) * n


def sft_inverse(spec: Spectrum, b_out: int | None = None, truncate: bool = False,
                real: bool = False, workers: int = 1) -> SphericalSignal:
    """Synthesize ``sum_l sum_m f_m^l Y_m^l`` on the ``2 b_out`` grid.

    ``b_out`` defaults to the spectrum bandwidth. Larger values zero-pad;
    smaller ones drop degrees ``>= b_out`` and require ``truncate=True``.
    ``real=True`` assumes the real-signal symmetry and returns real samples.
    """
    b = spec.b
    b_out = b if b_out is None else check_bandwidth(b_out)
    coeffs = spec.coeffs
    if b_out < b:
        if not truncate:
            raise ValueError(
                f"output bandwidth {b_out} is below spectrum bandwidth {b}; pass truncate=True")
        coeffs = coeffs[:, : b_out * b_out]
        b = b_out
    data = map_channels(lambda c: _inverse_one(c, b, b_out, real), coeffs, workers)
    return SphericalSignal(data)


# ---------------------------------------------------------------------------
# helpers shared by tests, pipelines and the CLI


def evaluate_spectrum(spec: Spectrum, theta, phi) -> np.ndarray:
    """Evaluate the expansion at arbitrary points; returns ``(C,) + points``."""
    Y = sph_harm_all(spec.b, theta, phi)
    return np.einsum("...k,ck->c...", Y, spec.coeffs)


def sample_harmonic(b: int, ell: int, m: int) -> SphericalSignal:
    return sft_inverse(Spectrum.delta(b, ell, m))


def rotate_signal(sig, g: RotationZYZ) -> SphericalSignal:
    """Samples of ``x -> f(R x)`` for a band-limited ``f``, done in coefficient space."""
    sig = _as_signal(sig)
    spec = rotate_spectrum(sft_forward_sepvars(sig), g)
    return sft_inverse(spec, real=sig.is_real)


def weighted_energy(sig) -> np.ndarray:
    """Quadrature estimate of ``int |f|^2`` per channel."""
    sig = _as_signal(sig)
    cell = quadrature_weights(sig.b).cell
    return np.einsum("cjk,j->c", np.abs(sig.data) ** 2, cell)


__all__ = [
    "evaluate_spectrum",
    "legendre_grid_table",
    "rotate_signal",
    "sample_harmonic",
    "sft_forward",
    "sft_forward_general",
    "sft_forward_sepvars",
    "sft_inverse",
    "weighted_energy",
]
