"""Spin-weighted spherical harmonic transforms and spin-aware operators.

``sY_m^l(theta, phi) = (-1)^s sqrt((2l+1)/(4pi)) e^{i m phi} d^l_{m,-s}(theta)``.

The transform writes ``d`` through Delta matrices,
``d^l_{m,-s}(theta) = i^{m+s} sum_k Delta^l_{k,m} Delta^l_{k,-s} e^{-i k theta}``,
extends the samples to a torus in ``theta`` and integrates with Fourier
weights for ``sin(theta)`` restricted to ``[0, pi]``.

Tangent frame: ``e_theta`` points toward increasing colatitude (south),
``e_phi`` toward increasing longitude (east); a tangent vector ``v`` becomes
``z = v . e_theta + i v . e_phi``, which has spin weight +1 here
(``z`` of ``grad Y_m^l`` is ``-sqrt(l(l+1)) 1Y_m^l``).
"""

from __future__ import annotations

import numpy as np

from .core import Spectrum, _readonly, make_grid, once_per_key
from .so3corr import SO3Spectrum
from .wigner import delta_table, wigner_d_table

FRAME_CONVENTION = "e_theta=south,e_phi=east,z=v_theta+i*v_phi"


def _as_grids(data) -> np.ndarray:
    data = np.asarray(data)
    if data.ndim == 2:
        data = data[None]
    if data.ndim != 3 or data.shape[1] != data.shape[2] or data.shape[1] % 2:
        raise ValueError(f"expected (channels, 2b, 2b) samples, got {data.shape}")
    return data


def _check_spin(s: int, b: int):
    if abs(s) >= b:
        raise ValueError(f"spin {s} needs bandwidth above {abs(s)}, got b={b}")


# ---------------------------------------------------------------------------
# torus extension and weights


def torus_extend(data, s: int) -> np.ndarray:
    """Extend ``(C, 2b, 2b)`` samples to the ``(C, 4b, 2b)`` periodic theta range.

    Rows ``j < 2b`` are the input, row ``2b`` (theta = pi, not sampled) is
    zero, and rows ``j > 2b`` hold ``(-1)^s f(2pi - theta_j, phi + pi)``.
    """
    data = _as_grids(data)
    C, n, _ = data.shape
    b = n // 2
    out = np.zeros((C, 2 * n, n), dtype=np.result_type(data, float))
    out[:, :n] = data
    j = np.arange(n + 1, 2 * n)
    shift = np.roll(np.arange(n), -b)  # column k -> k + b (phi + pi)
    out[:, n + 1:] = (-1.0) ** s * data[:, 2 * n - j][:, :, shift]
    return out


@once_per_key
def torus_weights(b: int) -> np.ndarray:
    """Weights on the ``4b`` torus colatitudes that integrate against ``sin(theta)`` on ``[0, pi]``.

    Fourier coefficients ``c_q = (1/2pi) int_0^pi sin(t) e^{-iqt} dt`` for
    ``|q| <= 2b - 2`` plus one ``e^{2ibt}`` term that zeroes the weight at
    ``theta = pi`` without changing any integral of degree below ``2b``.
    """
    q = np.arange(-(2 * b - 2), 2 * b - 1)
    c = np.zeros(q.size, complex)
    even = q % 2 == 0
    c[even] = 2.0 / (1.0 - q[even] ** 2)
    c[q == 1] = -1j * np.pi / 2
    c[q == -1] = 1j * np.pi / 2
    c /= 2 * np.pi
    t = np.pi * np.arange(4 * b) / (2 * b)
    w = (np.exp(1j * np.outer(t, q)) @ c).real
    w -= w[2 * b] * (-1.0) ** np.arange(4 * b)
    return _readonly(w)


# ---------------------------------------------------------------------------
# forward / inverse


def _phase(ms: np.ndarray, s: int) -> np.ndarray:
    return (-1.0) ** s * (1j ** ((ms + s) % 4))


def swsft_forward(data, s: int) -> Spectrum:
    """Spin-``s`` coefficients of ``(C, 2b, 2b)`` samples."""
    data = _as_grids(data)
    C, n, _ = data.shape
    b = n // 2
    _check_spin(s, b)
    ft = torus_extend(data, s) * torus_weights(b)[None, :, None]
    I = np.fft.fft2(ft, axes=(1, 2)) * (2 * np.pi / (2 * n)) * (2 * np.pi / n)
    deltas = delta_table(b - 1)
    out = np.zeros((C, b * b), complex)
    for ell in range(abs(s), b):
        D = deltas[ell]
        ks = np.arange(-ell, ell + 1)
        Ik = I[:, ks % (2 * n)][:, :, ks % n]  # (C, k, m)
        kern = D * D[:, -s + ell][:, None]  # Delta_{k,m} Delta_{k,-s}
        pref = np.sqrt((2 * ell + 1) / (4 * np.pi)) * _phase(ks, s)
        out[:, ell * ell:(ell + 1) ** 2] = pref * np.einsum("km,ckm->cm", kern, Ik)
    return Spectrum(out, s)


def swsft_inverse(spec: Spectrum, s: int | None = None) -> np.ndarray:
    """Samples ``(C, 2b, 2b)`` of ``sum_l sum_m sf_m^l sY_m^l``."""
    s = spec.spin if s is None else s
    b = spec.b
    _check_spin(s, b)
    c = spec.coeffs
    low = abs(s) * abs(s)
    if low and np.any(c[:, :low] != 0):
        raise ValueError(f"spin-{s} spectrum has nonzero coefficients below degree {abs(s)}")
    n = 2 * b
    deltas = delta_table(b - 1)
    G = np.zeros((c.shape[0], 2 * n, n), complex)
    for ell in range(abs(s), b):
        D = deltas[ell]
        ks = np.arange(-ell, ell + 1)
        pref = np.sqrt((2 * ell + 1) / (4 * np.pi)) * _phase(ks, s)
        kern = D * D[:, -s + ell][:, None]  # [k, m]
        contrib = np.einsum("km,cm->ckm", kern, pref * c[:, ell * ell:(ell + 1) ** 2])
        G[:, (ks % (2 * n))[:, None], (ks % n)[None, :]] += contrib
    # sum_k G e^{-ik theta_j}: forward FFT of length 4b, keep the first 2b rows
    rows = np.fft.fft(G, axis=1)[:, :n]
    return np.fft.ifft(rows, axis=2) * n


def swsh_all(s: int, b: int, theta, phi) -> np.ndarray:
    """All ``sY_m^l`` with ``l < b`` at the given points, shape ``points + (b**2,)``."""
    theta = np.asarray(theta, float)
    phi = np.asarray(phi, float)
    ds = wigner_d_table(b - 1, theta)
    out = np.zeros(theta.shape + (b * b,), complex)
    for ell in range(abs(s), b):
        m = np.arange(-ell, ell + 1)
        col = ds[ell][..., :, -s + ell]
        out[..., ell * ell:(ell + 1) ** 2] = ((-1) ** s * np.sqrt((2 * ell + 1) / (4 * np.pi))
                                              * col * np.exp(1j * m * phi[..., None]))
    return out


def evaluate_spin_spectrum(spec: Spectrum, theta, phi) -> np.ndarray:
    Y = swsh_all(spec.spin, spec.b, theta, phi)
    return np.einsum("...k,ck->c...", Y, spec.coeffs)


# ---------------------------------------------------------------------------
# spin convolution and correlation


def _filter_values(v, b: int, c_in: int) -> np.ndarray:
    v = np.asarray(v, complex)
    if v.shape == (b,):
        return v[None, None, :] * np.eye(c_in)[:, :, None]
    if v.ndim == 3 and v.shape[0] == c_in and v.shape[2] == b:
        return v
    raise ValueError(f"filter entry of shape {v.shape} does not fit b={b}, {c_in} input channels")


def spin_conv(F: dict, K: dict) -> dict:
    """Spin convolution ``s(F*K)_m^l = sum_{i in W_F} if_m^l sk_i^l``.

    ``F`` maps spin ``i`` to a :class:`Spectrum`. ``K`` maps each output spin
    ``s`` to ``{i: values}`` where ``values`` is either ``(b,)`` (shared across
    channels) or ``(C_in, C_out, b)``. Every input spin needs an entry.
    """
    if not F:
        raise ValueError("empty input spin set")
    specs = list(F.values())
    b, c_in = specs[0].b, specs[0].channels
    for sp in specs:
        if sp.b != b or sp.channels != c_in:
            raise ValueError("input spectra differ in bandwidth or channel count")
    ells = np.repeat(np.arange(b), 2 * np.arange(b) + 1)
    out = {}
    for s, orders in K.items():
        missing = set(F) - set(orders)
        if missing:
            raise ValueError(f"filter for output spin {s} lacks orders {sorted(missing)}")
        _check_spin(s, b)
        acc = None
        for i, fi in F.items():
            w = _filter_values(orders[i], b, c_in)
            term = np.einsum("ck,cok->ok", fi.coeffs, w[:, :, ells])
            acc = term if acc is None else acc + term
        acc[:, ells < abs(s)] = 0.0
        out[s] = Spectrum(acc, s)
    return out


def spin_corr(F: dict, K: dict) -> SO3Spectrum:
    """Spin cross-correlation lifted to SO(3).

    With ``P^l[m, s] = sum_i sum_c if_m^l conj(ik_s^l)`` over the shared
    spins, the result has blocks ``P^H / (2l+1)``, the same layout as
    :func:`rotharm.so3corr.sph_corr_spectrum`, to which it reduces for ``{0}``.
    """
    common = sorted(set(F) & set(K))
    if not common:
        raise ValueError("input and filter spin sets do not intersect")
    b = F[common[0]].b
    blocks = []
    for ell in range(b):
        sl = slice(ell * ell, (ell + 1) ** 2)
        P = np.zeros((2 * ell + 1, 2 * ell + 1), complex)
        for i in common:
            fi, ki = F[i], K[i]
            if fi.b != b or ki.b != b or fi.channels != ki.channels:
                raise ValueError(f"spin {i}: bandwidth or channel mismatch")
            P += fi.coeffs[:, sl].T @ ki.coeffs[:, sl].conj()
        blocks.append(P.conj().T / (2 * ell + 1))
    return SO3Spectrum(tuple(blocks))


# ---------------------------------------------------------------------------
# pointwise operators


def phase_relu(z, bias: float):
    """``a e^{i t} -> max(a + bias, 0) e^{i t}``."""
    z = np.asarray(z, complex)
    a = np.abs(z)
    scale = np.divide(np.maximum(a + bias, 0.0), a, out=np.zeros_like(a), where=a > 0)
    return z * scale


def phase_scale(z, sigma2: float, gamma: complex = 1.0, eps: float = 1e-5):
    """``z -> z gamma / sqrt(sigma2 + eps)``; no centering so phases survive."""
    return np.asarray(z, complex) * gamma / np.sqrt(sigma2 + eps)


def phase_batch_norm(z, gamma: complex = 1.0, eps: float = 0.0):
    """:func:`phase_scale` with ``sigma2 = mean |z|^2`` of the batch."""
    z = np.asarray(z, complex)
    return phase_scale(z, float(np.mean(np.abs(z) ** 2)), gamma, eps)


# ---------------------------------------------------------------------------
# tangent vector fields


@once_per_key
def tangent_frame(b: int) -> tuple[np.ndarray, np.ndarray]:
    """``(e_theta, e_phi)`` as ``(3, 2b, 2b)`` arrays on the grid."""
    T, P = make_grid(b).mesh()
    e_t = np.stack([np.cos(T) * np.cos(P), np.cos(T) * np.sin(P), -np.sin(T)])
    e_p = np.stack([-np.sin(P), np.cos(P), np.zeros_like(P)])
    return _readonly(e_t), _readonly(e_p)


def vf_to_spin1(vf) -> np.ndarray:
    """Cartesian tangent field ``(C, 3, 2b, 2b)`` to spin-1 samples ``(C, 2b, 2b)``.

    The pole row ``theta = 0`` carries no frame and is set to zero.
    """
    vf = np.asarray(vf, float)
    if vf.ndim == 3:
        vf = vf[None]
    b = vf.shape[-1] // 2
    e_t, e_p = tangent_frame(b)
    z = np.einsum("cxjk,xjk->cjk", vf, e_t) + 1j * np.einsum("cxjk,xjk->cjk", vf, e_p)
    z[:, 0] = 0.0
    return z


def spin1_to_vf(z) -> np.ndarray:
    """Inverse of :func:`vf_to_spin1`: ``v = Re(z) e_theta + Im(z) e_phi``."""
    z = _as_grids(z)
    b = z.shape[-1] // 2
    e_t, e_p = tangent_frame(b)
    v = z.real[:, None] * e_t[None] + z.imag[:, None] * e_p[None]
    v[:, :, 0] = 0.0
    return v
