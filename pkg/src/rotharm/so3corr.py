"""Spherical cross-correlation on SO(3), SO(3) synthesis and rotation alignment.

An SO(3) spectrum ``F`` holds one ``(2l+1) x (2l+1)`` block per degree and
represents ``G(g) = sum_l (2l+1) tr(F^l D^l(g))`` with ``D`` from
:mod:`rotharm.wigner`. Blocks are indexed ``[n + l, m + l]`` so that the trace
pairs ``F_{nm}`` with ``D_{mn}``.

The correlation of ``f`` against ``k`` is ``G(R) = int conj(f(R x)) k(x) dx``,
so ``G(identity) = int conj(f) k`` and, for ``k(x) = f(h x)``, the peak sits
at ``R = h``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RotationZYZ, SphericalSignal, Spectrum
from .sft import sft_forward_sepvars
from .wigner import wigner_d_table


@dataclass(frozen=True)
class SO3Spectrum:
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(np.asarray(B, complex) for B in self.blocks)
        if not blocks:
            raise ValueError("SO(3) spectrum needs at least one degree")
        for ell, B in enumerate(blocks):
            if B.shape != (2 * ell + 1, 2 * ell + 1):
                raise ValueError(f"block {ell} has shape {B.shape}, expected side {2 * ell + 1}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def b(self) -> int:
        return len(self.blocks)

    @classmethod
    def zeros(cls, b: int) -> "SO3Spectrum":
        return cls(tuple(np.zeros((2 * l + 1, 2 * l + 1), complex) for l in range(b)))

    def __add__(self, other: "SO3Spectrum") -> "SO3Spectrum":
        _check_same_b(self, other)
        return SO3Spectrum(tuple(a + c for a, c in zip(self.blocks, other.blocks)))

    def __mul__(self, c: complex) -> "SO3Spectrum":
        return SO3Spectrum(tuple(c * a for a in self.blocks))

    __rmul__ = __mul__

    def flat(self) -> np.ndarray:
        return np.concatenate([B.ravel() for B in self.blocks])

    @classmethod
    def from_flat(cls, v: np.ndarray, b: int) -> "SO3Spectrum":
        out, pos = [], 0
        for l in range(b):
            s = (2 * l + 1) ** 2
            out.append(np.asarray(v[pos:pos + s]).reshape(2 * l + 1, 2 * l + 1))
            pos += s
        if pos != len(v):
            raise ValueError(f"{len(v)} values do not form an SO(3) spectrum of bandwidth {b}")
        return cls(tuple(out))


@dataclass(frozen=True)
class SO3Signal:
    """Samples ``data[i, j, k] = G(alpha_i, beta_j, gamma_k)`` on an ``n^3`` Euler grid.

    ``alpha_i = 2 pi i / n``, ``beta_j = pi j / (n - 1)``, ``gamma_k = 2 pi k / n``.
    """

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, float)
        if data.ndim != 3 or len(set(data.shape)) != 1 or data.shape[0] < 2:
            raise ValueError(f"expected an n x n x n table with n >= 2, got {data.shape}")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def alphas(self) -> np.ndarray:
        return euler_grid(self.n)[0]

    @property
    def betas(self) -> np.ndarray:
        return euler_grid(self.n)[1]

    @property
    def gammas(self) -> np.ndarray:
        return euler_grid(self.n)[2]

    @property
    def spacing(self) -> float:
        return grid_spacing(self.n)


def euler_grid(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    a = 2 * np.pi * np.arange(n) / n
    return a, np.pi * np.arange(n) / (n - 1), a.copy()


def grid_spacing(n: int) -> float:
    """Angular step of the alpha and gamma axes, used as the accuracy unit."""
    return 2 * np.pi / n


def _check_same_b(a, c):
    if a.b != c.b:
        raise ValueError(f"bandwidth mismatch: {a.b} vs {c.b}")


# ---------------------------------------------------------------------------
# spectra


def sph_corr_spectrum(f: Spectrum, k: Spectrum) -> SO3Spectrum:
    """SO(3) spectrum of ``G(R) = sum_c int conj(f_c(R x)) k_c(x) dx``.

    Block ``l`` is ``sum_c k_c^l (f_c^l)^H / (2l+1)``.
    """
    _check_same_b(f, k)
    if f.channels != k.channels:
        raise ValueError(f"channel mismatch: {f.channels} vs {k.channels}")
    if f.spin or k.spin:
        raise ValueError("spherical correlation takes spin-0 spectra")
    blocks = []
    for ell in range(f.b):
        fl, kl = f.degree(ell), k.degree(ell)
        blocks.append(kl.T @ fl.conj() / (2 * ell + 1))
    return SO3Spectrum(tuple(blocks))


def group_corr_spectrum(f: SO3Spectrum, k: SO3Spectrum) -> SO3Spectrum:
    """Spectrum of ``C(g) = int f(g h) conj(k(h)) dh``: blockwise ``k^H f``."""
    _check_same_b(f, k)
    return SO3Spectrum(tuple(K.conj().T @ F for F, K in zip(f.blocks, k.blocks)))


# ---------------------------------------------------------------------------
# synthesis


def so3_evaluate(S: SO3Spectrum, g: RotationZYZ) -> complex:
    """``sum_l (2l+1) tr(F^l D^l(g))`` at a single rotation."""
    ds = wigner_d_table(S.b - 1, g.beta)
    total = 0.0j
    for ell, (F, d) in enumerate(zip(S.blocks, ds)):
        m = np.arange(-ell, ell + 1)
        D = np.exp(-1j * m * g.alpha)[:, None] * d * np.exp(-1j * m * g.gamma)[None, :]
        total += (2 * ell + 1) * np.sum(F.T * D)
    return total


def so3_synthesize(S: SO3Spectrum, n: int, complex_out: bool = False):
    """Evaluate the inversion sum on the ``n^3`` Euler grid.

    Each beta row is one 2D FFT over the (m, n) orders, so the cost is
    ``O(n b^3 + n^3 log n)``. Returns the real part as an :class:`SO3Signal`
    unless ``complex_out`` is set.
    """
    b = S.b
    if n < 2 * b:
        raise ValueError(f"Euler grid size {n} is below 2b = {2 * b}")
    _, betas, _ = euler_grid(n)
    ds = wigner_d_table(b - 1, betas)
    K = b - 1
    A = np.zeros((n, 2 * K + 1, 2 * K + 1), complex)
    for ell, (F, d) in enumerate(zip(S.blocks, ds)):
        sl = slice(K - ell, K + ell + 1)
        A[:, sl, sl] += (2 * ell + 1) * F.T[None] * d
    # orders -K..K go to FFT bins m mod n
    idx = np.arange(-K, K + 1) % n
    P = np.zeros((n, n, n), complex)
    P[:, idx[:, None], idx[None, :]] = A
    out = np.fft.fft2(P, axes=(1, 2))  # (beta, alpha, gamma)
    out = np.transpose(out, (1, 0, 2))
    return out if complex_out else SO3Signal(out.real)


# ---------------------------------------------------------------------------
# peak finding


class DegeneratePeakError(ValueError):
    pass


@dataclass(frozen=True)
class PeakResult:
    rotation: RotationZYZ
    score: float
    index: tuple[int, int, int]
    ambiguous: bool
    spacing: float


def _parabola_offset(ym: float, y0: float, yp: float) -> float:
    den = ym - 2 * y0 + yp
    if den >= 0:
        return 0.0
    return float(np.clip(0.5 * (ym - yp) / den, -0.5, 0.5))


def argmax_rotation(sig: SO3Signal, refine: bool = True) -> PeakResult:
    """Largest node of the Euler table, optionally refined by a parabola per axis.

    Ties go to the first node in (alpha, beta, gamma) lexicographic order and
    are flagged as ambiguous when the tied nodes are different rotations.
    """
    data = sig.data
    if data.size == 0:
        raise ValueError("empty SO(3) signal")
    top = data.max()
    if np.all(data == top):
        raise DegeneratePeakError("degenerate peak: signal is constant")
    n = sig.n
    a, bt, c = euler_grid(n)
    hits = np.argwhere(data == top)
    i, j, k = (int(v) for v in hits[0])
    g0 = RotationZYZ(a[i], bt[j], c[k])
    ambiguous = False
    for hi, hj, hk in hits[1:]:
        other = RotationZYZ(a[hi], bt[hj], c[hk])
        if np.abs(other.matrix() - g0.matrix()).max() > 1e-9:
            ambiguous = True
            break
    alpha, beta, gamma = a[i], bt[j], c[k]
    if refine:
        step = 2 * np.pi / n
        alpha += step * _parabola_offset(data[(i - 1) % n, j, k], top, data[(i + 1) % n, j, k])
        gamma += step * _parabola_offset(data[i, j, (k - 1) % n], top, data[i, j, (k + 1) % n])
        if 0 < j < n - 1:
            beta += (np.pi / (n - 1)) * _parabola_offset(data[i, j - 1, k], top, data[i, j + 1, k])
    return PeakResult(RotationZYZ(alpha, beta, gamma), float(top), (i, j, k),
                      ambiguous, grid_spacing(n))


# ---------------------------------------------------------------------------
# alignment


def _spectrum_of(x) -> Spectrum:
    if isinstance(x, Spectrum):
        return x
    return sft_forward_sepvars(x if isinstance(x, SphericalSignal) else SphericalSignal(x))


def align(f, k, n: int | None = None, refine: bool = True, upsample: int = 1) -> PeakResult:
    """Rotation ``R`` that best explains ``k(x) = f(R x)``, with its correlation score.

    ``f`` and ``k`` are signals on the same grid (or their spectra). All
    channels contribute to one summed correlation. ``upsample`` synthesizes on
    a finer Euler grid, which is the coefficient zero-padding route to
    sub-cell accuracy.
    """
    fs, ks = _spectrum_of(f), _spectrum_of(k)
    S = sph_corr_spectrum(fs, ks)
    n = 2 * fs.b if n is None else int(n)
    return argmax_rotation(so3_synthesize(S, n * int(upsample)), refine=refine)
