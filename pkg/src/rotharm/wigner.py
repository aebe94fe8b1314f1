"""Associated Legendre functions, spherical harmonics and Wigner matrices.

Conventions (see ``docs/conventions.md`` for golden values):

* ``P_m^l`` carries the Condon-Shortley phase,
  ``P_1^1(x) = -sqrt(1 - x^2)``.
* ``Y_m^l(theta, phi) = sqrt((2l+1)/(4pi) (l-m)!/(l+m)!) P_m^l(cos theta) e^{i m phi}``.
* ``D^l_{mn}(alpha, beta, gamma) = e^{-i m alpha} d^l_{mn}(beta) e^{-i n gamma}``
  with ``d^1_{1,0}(beta) = -sin(beta)/sqrt(2)``, so that
  ``D^l_{m0}(a, b, c) = sqrt(4pi/(2l+1)) conj(Y_m^l(b, a))`` and
  ``Y^l(R x) = conj(D^l(R)) Y^l(x)`` for ``R = Rz(a) Ry(b) Rz(c)``.
* Matrices are indexed ``[m + l, n + l]`` (ascending ``m`` rows, ``n`` columns).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from .core import (
    RotationZYZ,
    Spectrum,
    _readonly,
    degree_slice,
    once_per_key,
)

_FOUR_PI = 4.0 * np.pi


# ---------------------------------------------------------------------------
# associated Legendre functions


def normalized_legendre(lmax: int, x) -> np.ndarray:
    r"""Orthonormal associated Legendre functions for ``0 <= m <= l <= lmax``.

    Returns ``lam`` with shape ``(lmax + 1, lmax + 1) + x.shape`` indexed
    ``[m, l]`` where ``lam[m, l] = sqrt((2l+1)/(4pi) (l-m)!/(l+m)!) P_m^l(x)``
    (zero for ``l < m``). Uses the standard stable recursion in ``l``.
    """
    x = np.asarray(x, float)
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    lam = np.zeros((lmax + 1, lmax + 1) + x.shape)
    pmm = np.full(x.shape, 1.0 / np.sqrt(_FOUR_PI))
    for m in range(lmax + 1):
        if m > 0:
            pmm = -np.sqrt((2 * m + 1) / (2.0 * m)) * s * pmm
        lam[m, m] = pmm
        if m + 1 > lmax:
            break
        lam[m, m + 1] = np.sqrt(2 * m + 3.0) * x * pmm
        for ell in range(m + 2, lmax + 1):
            a = np.sqrt((4.0 * ell * ell - 1) / (ell * ell - m * m))
            c = np.sqrt(((ell - 1.0) ** 2 - m * m) / (4.0 * (ell - 1) ** 2 - 1))
            lam[m, ell] = a * (x * lam[m, ell - 1] - c * lam[m, ell - 2])
    return lam


def legendre_assoc(ell: int, m: int, x):
    """Associated Legendre function ``P_m^l(x)`` with Condon-Shortley phase."""
    if not 0 <= m <= ell:
        raise ValueError(f"need 0 <= m <= l, got l={ell}, m={m}")
    xa = np.asarray(x, float)
    if np.any(np.abs(xa) > 1.0):
        raise ValueError("x must lie in [-1, 1]")
    lam = normalized_legendre(ell, xa)[m, ell]
    # undo the normalization in log space to avoid factorial overflow
    log_ratio = gammaln(ell + m + 1) - gammaln(ell - m + 1)
    out = lam * np.exp(0.5 * log_ratio) * np.sqrt(_FOUR_PI / (2 * ell + 1))
    return out if out.ndim else float(out)


def sph_harm(ell: int, m: int, theta, phi):
    """Orthonormal complex spherical harmonic ``Y_m^l(theta, phi)``."""
    if abs(m) > ell:
        raise ValueError(f"|m| must not exceed l, got l={ell}, m={m}")
    theta = np.asarray(theta, float)
    phi = np.asarray(phi, float)
    lam = normalized_legendre(ell, np.cos(theta))[abs(m), ell]
    val = lam * np.exp(1j * abs(m) * phi)
    if m < 0:
        val = (-1) ** m * np.conj(val)
    return val if val.ndim else complex(val)


def sph_harm_all(b: int, theta, phi) -> np.ndarray:
    """All ``Y_m^l`` with ``l < b`` at the given points, shape ``points + (b**2,)``."""
    theta = np.asarray(theta, float)
    phi = np.asarray(phi, float)
    lam = normalized_legendre(b - 1, np.cos(theta))
    out = np.zeros(theta.shape + (b * b,), complex)
    for m in range(b):
        e = np.exp(1j * m * phi)
        for ell in range(m, b):
            y = lam[m, ell] * e
            out[..., ell * ell + ell + m] = y
            if m:
                out[..., ell * ell + ell - m] = (-1) ** m * np.conj(y)
    return out


# ---------------------------------------------------------------------------
# Wigner d matrices


def _seed_log(L: int, m: np.ndarray, n: np.ndarray) -> np.ndarray:
    # log sqrt((2L)! / ((L+k)! (L-k)!)) for the free index k of an extremal entry
    k = np.where(np.abs(m) == L, n, m)
    return 0.5 * (gammaln(2 * L + 1) - gammaln(L + k + 1) - gammaln(L - k + 1))


def _extremal_d(L: int, m: np.ndarray, n: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """``d^L_{mn}(beta)`` for entries with ``max(|m|, |n|) == L`` (one-term formulas)."""
    c = np.cos(beta / 2.0)[..., None]
    s = np.sin(beta / 2.0)[..., None]
    coef = np.exp(_seed_log(L, m, n))
    out = np.empty(beta.shape + m.shape)
    top = m == L
    bot = (m == -L) & ~top
    right = (n == L) & ~top & ~bot
    left = ~top & ~bot & ~right
    # d_{L,n} = (-1)^{L-n} C c^{L+n} s^{L-n}
    out[..., top] = (-1.0) ** (L - n[top]) * coef[top] * c ** (L + n[top]) * s ** (L - n[top])
    # d_{-L,n} = C c^{L-n} s^{L+n}
    out[..., bot] = coef[bot] * c ** (L - n[bot]) * s ** (L + n[bot])
    # d_{m,L} = C c^{L+m} s^{L-m}
    out[..., right] = coef[right] * c ** (L + m[right]) * s ** (L - m[right])
    # d_{m,-L} = (-1)^{m+L} C c^{L-m} s^{L+m}
    out[..., left] = (-1.0) ** (m[left] + L) * coef[left] * c ** (L - m[left]) * s ** (L + m[left])
    return out


def wigner_d_table(lmax: int, beta) -> list[np.ndarray]:
    """Wigner small-d matrices for every degree ``0..lmax`` at angles ``beta``.

    Entry ``[l]`` has shape ``beta.shape + (2l+1, 2l+1)``. Each ``(m, n)``
    sequence is seeded with the one-term closed form at ``l = max(|m|, |n|)``
    and continued with the three-term recurrence in ``l``, which stays
    accurate well past ``l = 128``.
    """
    beta = np.asarray(beta, float)
    K = lmax
    idx = np.arange(-K, K + 1)
    M, N = np.meshgrid(idx, idx, indexing="ij")
    L = np.maximum(np.abs(M), np.abs(N))
    cosb = np.cos(beta)[..., None, None]
    prev = np.zeros(beta.shape + M.shape)
    cur = np.zeros(beta.shape + M.shape)
    cur[..., K, K] = 1.0
    out = [np.ones(beta.shape + (1, 1))]
    for ell in range(0, lmax):
        nxt = np.zeros_like(cur)
        live = L <= ell
        if ell == 0:
            nxt[..., K, K] = cosb[..., 0, 0] * cur[..., K, K]
        else:
            m, n = M[live].astype(float), N[live].astype(float)
            lp = ell + 1.0
            denom = np.sqrt((lp * lp - m * m) * (lp * lp - n * n))
            a = lp * (2 * ell + 1) / denom
            b = m * n / (ell * lp)
            c = lp * np.sqrt((ell * ell - m * m) * (ell * ell - n * n)) / (ell * denom)
            nxt[..., live] = a * (cosb[..., 0, 0][..., None] - b) * cur[..., live] - c * prev[..., live]
        edge = L == ell + 1
        nxt[..., edge] = _extremal_d(ell + 1, M[edge], N[edge], beta)
        prev, cur = cur, nxt
        lo, hi = K - ell - 1, K + ell + 2
        out.append(cur[..., lo:hi, lo:hi].copy())
    return out


def little_d(ell: int, beta) -> np.ndarray:
    """Wigner small-d matrix ``d^l(beta)``, shape ``beta.shape + (2l+1, 2l+1)``."""
    if ell < 0:
        raise ValueError("degree must be non-negative")
    return wigner_d_table(ell, beta)[ell]


def wigner_D(ell: int, g: RotationZYZ) -> np.ndarray:
    """Unitary Wigner D-matrix of degree ``ell`` at rotation ``g``."""
    m = np.arange(-ell, ell + 1)
    d = little_d(ell, g.beta)
    return np.exp(-1j * m * g.alpha)[:, None] * d * np.exp(-1j * m * g.gamma)[None, :]


def wigner_D_table(lmax: int, g: RotationZYZ) -> list[np.ndarray]:
    ds = wigner_d_table(lmax, g.beta)
    out = []
    for ell, d in enumerate(ds):
        m = np.arange(-ell, ell + 1)
        out.append(np.exp(-1j * m * g.alpha)[:, None] * d * np.exp(-1j * m * g.gamma)[None, :])
    return out


@once_per_key
def _delta_table(lmax: int) -> tuple[np.ndarray, ...]:
    return tuple(_readonly(d) for d in wigner_d_table(lmax, np.pi / 2))


def delta_table(lmax: int) -> tuple[np.ndarray, ...]:
    """Cached ``Delta^l = d^l(pi/2)`` for ``l = 0..lmax`` (read-only arrays)."""
    # grow by powers of two so nearby requests share one cache entry
    size = 1 << max(int(lmax), 1).bit_length()
    return _delta_table(size)[: lmax + 1]


def delta_matrix(ell: int) -> np.ndarray:
    return delta_table(ell)[ell]


def risbo_little_d(ell: int, beta: float) -> np.ndarray:
    """``d^l(beta)`` rebuilt from Delta matrices.

    ``d_{mn}(beta) = i^{m-n} sum_k Delta_{km} e^{-i k beta} Delta_{kn}``
    """
    delta = delta_matrix(ell)
    k = np.arange(-ell, ell + 1)
    inner = (delta * np.exp(-1j * k * beta)[:, None]).T @ delta
    phase = 1j ** np.subtract.outer(k, k)
    return (phase * inner).real


# ---------------------------------------------------------------------------
# spin-weighted harmonics and coefficient rotation


def swsh(s: int, ell: int, m: int, theta, phi):
    """Spin-weighted harmonic ``sY_m^l(theta, phi)``.

    Defined through ``D^l_{m,-s}(phi, theta, gamma) =
    (-1)^s sqrt(4pi/(2l+1)) conj(sY_m^l(theta, phi)) e^{-i s gamma}``.
    """
    if abs(s) > ell:
        raise ValueError(f"spin-weighted harmonic needs |s| <= l, got s={s}, l={ell}")
    if abs(m) > ell:
        raise ValueError(f"|m| must not exceed l, got l={ell}, m={m}")
    theta = np.asarray(theta, float)
    phi = np.asarray(phi, float)
    d = little_d(ell, theta)[..., m + ell, -s + ell]
    val = (-1) ** s * np.sqrt((2 * ell + 1) / _FOUR_PI) * d * np.exp(1j * m * phi)
    return val if val.ndim else complex(val)


def rotate_spectrum(spec: Spectrum, g: RotationZYZ) -> Spectrum:
    """Coefficients of ``x -> f(R x)`` where ``R = g.matrix()``.

    Applies ``f_n^l -> sum_m conj(D^l_{mn}(g)) f_m^l`` degree by degree, so
    band limit and per-degree norms are preserved. Works for any spin.
    """
    b = spec.b
    out = np.empty_like(spec.coeffs)
    for ell, D in enumerate(wigner_D_table(b - 1, g)):
        sl = degree_slice(ell)
        out[:, sl] = spec.coeffs[:, sl] @ np.conj(D)
    return Spectrum(out, spec.spin)


def factorial_ratio_log(a: int, b: int) -> float:
    """``log(a! / b!)`` without forming either factorial."""
    return math.lgamma(a + 1) - math.lgamma(b + 1)
