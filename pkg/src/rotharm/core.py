"""Grids, coefficient layouts, rotations and quadrature shared by all transforms.

Layout conventions used throughout the package:

* A spherical signal is an array of shape ``(channels, 2b, 2b)`` sampled at
  ``theta_j = pi j / (2b)`` (rows) and ``phi_k = pi k / b`` (columns).
* A spectrum stores degree ``l < b`` and order ``|m| <= l`` at flat index
  ``l**2 + l + m``; shape ``(channels, b**2)``.
* Rotations are ZYZ Euler triples acting as ``R = Rz(alpha) Ry(beta) Rz(gamma)``.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import wraps
from typing import Callable

import numpy as np
from numpy.polynomial import legendre

TWO_PI = 2.0 * np.pi


def once_per_key(fn: Callable) -> Callable:
    """Memoize ``fn`` by its positional arguments, computing each key once.

    The lock makes concurrent first calls for the same key wait on a single
    computation instead of racing.
    """
    cache: dict = {}
    lock = threading.Lock()

    @wraps(fn)
    def wrapper(*args):
        try:
            return cache[args]
        except KeyError:
            pass
        with lock:
            if args not in cache:
                cache[args] = fn(*args)
            return cache[args]

    wrapper.cache = cache
    return wrapper


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def check_bandwidth(b) -> int:
    if isinstance(b, (bool, np.bool_)) or int(b) != b:
        raise ValueError(f"bandwidth must be an integer, got {b!r}")
    b = int(b)
    if b < 1:
        raise ValueError(f"bandwidth must be >= 1, got {b}")
    return b


def n_coeffs(b: int) -> int:
    return b * b


def coeff_index(ell, m):
    """Flat index of ``(ell, m)`` in the triangular spectrum layout."""
    return ell * ell + ell + m


def degree_slice(ell: int) -> slice:
    return slice(ell * ell, (ell + 1) * (ell + 1))


def degrees_and_orders(b: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``(ell, m)`` for every flat index below ``b**2``."""
    ells = np.repeat(np.arange(b), 2 * np.arange(b) + 1)
    ms = np.arange(b * b) - ells * ells - ells
    return ells, ms


# ---------------------------------------------------------------------------
# grid and quadrature


@dataclass(frozen=True)
class GridSpec:
    b: int
    thetas: np.ndarray = field(repr=False)
    phis: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return (2 * self.b, 2 * self.b)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.thetas, self.phis, indexing="ij")

    def points(self) -> np.ndarray:
        """Unit vectors of all grid nodes, shape ``(2b, 2b, 3)``."""
        t, p = self.mesh()
        return sph2cart(t, p)


@once_per_key
def make_grid(b: int) -> GridSpec:
    """Driscoll-Healy equiangular grid for bandwidth ``b``."""
    b = check_bandwidth(b)
    j = np.arange(2 * b)
    return GridSpec(b, _readonly(np.pi * j / (2 * b)), _readonly(np.pi * j / b))


@dataclass(frozen=True)
class QuadratureWeights:
    """Per-ring weights of the equiangular quadrature.

    ``ring[j]`` integrates against ``sin(theta)``: for any polynomial ``p`` in
    ``cos(theta)`` of degree below ``2b``,
    ``sum_j ring[j] p(cos theta_j) == int_0^pi p(cos t) sin t dt``.
    ``a`` is the same table in the classical normalization
    ``sum_j a_j P_k(cos theta_j) = sqrt(2) delta_k0``.
    """

    b: int
    ring: np.ndarray = field(repr=False)

    @property
    def a(self) -> np.ndarray:
        return np.sqrt(2.0) * self.ring

    @property
    def cell(self) -> np.ndarray:
        """Weight of one grid node, ``ring * (pi / b)``; sums to ``4 pi``."""
        return self.ring * (np.pi / self.b)


@once_per_key
def quadrature_weights(b: int) -> QuadratureWeights:
    """Solve the exactness system against Legendre polynomials of degree < 2b."""
    b = check_bandwidth(b)
    x = np.cos(make_grid(b).thetas)
    # rows: P_n(x_j), n = 0..2b-1; rhs: int_{-1}^{1} P_n = 2 delta_n0
    vander = legendre.legvander(x, 2 * b - 1).T
    rhs = np.zeros(2 * b)
    rhs[0] = 2.0
    ring = np.linalg.solve(vander, rhs)
    # the pole node carries no area; the solve returns it at roundoff level
    ring[np.abs(ring) < 1e-14] = 0.0
    return QuadratureWeights(b, _readonly(ring))


def dh_closed_form_weights(b: int) -> np.ndarray:
    """Driscoll-Healy closed-form ring weights, same normalization as ``ring``.

    Used as an independent check of :func:`quadrature_weights`.
    """
    b = check_bandwidth(b)
    theta = make_grid(b).thetas
    k = np.arange(b)
    s = np.sin(np.outer(theta, 2 * k + 1)) / (2 * k + 1)
    # classical a_j = (2 sqrt2 / b) sin(theta_j) sum_k ...; ring = a_j / sqrt2
    a = (2.0 * np.sqrt(2.0) / b) * np.sin(theta) * s.sum(axis=1)
    return a / np.sqrt(2.0)


# ---------------------------------------------------------------------------
# containers


@dataclass(frozen=True)
class SphericalSignal:
    """Samples on the ``2b x 2b`` equiangular grid; ``data`` is ``(C, 2b, 2b)``."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 2:
            data = data[None]
        if data.ndim != 3:
            raise ValueError(f"expected (channels, 2b, 2b) samples, got shape {data.shape}")
        h, w = data.shape[1:]
        if h != w:
            raise ValueError(f"grid must be square, got {h}x{w}")
        if h % 2 or h == 0:
            raise ValueError(f"grid resolution must be even and positive, got {h}")
        if data.shape[0] < 1:
            raise ValueError("signal needs at least one channel")
        object.__setattr__(self, "data", data)

    @property
    def b(self) -> int:
        return self.data.shape[1] // 2

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def grid(self) -> GridSpec:
        return make_grid(self.b)

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.data)


@dataclass(frozen=True)
class Spectrum:
    """Triangular coefficient table, ``coeffs`` has shape ``(C, b**2)``."""

    coeffs: np.ndarray
    spin: int = 0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == 1:
            c = c[None]
        if c.ndim != 2:
            raise ValueError(f"expected (channels, b**2) coefficients, got {c.shape}")
        b = int(round(np.sqrt(c.shape[1])))
        if b * b != c.shape[1] or b < 1:
            raise ValueError(f"coefficient count {c.shape[1]} is not a positive square")
        object.__setattr__(self, "coeffs", c)

    @property
    def b(self) -> int:
        return int(round(np.sqrt(self.coeffs.shape[1])))

    @property
    def channels(self) -> int:
        return self.coeffs.shape[0]

    def degree(self, ell: int) -> np.ndarray:
        """Coefficients of degree ``ell``, shape ``(C, 2 ell + 1)``, ``m`` ascending."""
        return self.coeffs[:, degree_slice(ell)]

    def get(self, ell: int, m: int, channel: int = 0) -> complex:
        return self.coeffs[channel, coeff_index(ell, m)]

    @classmethod
    def zeros(cls, b: int, channels: int = 1, spin: int = 0) -> "Spectrum":
        return cls(np.zeros((channels, b * b), complex), spin)

    @classmethod
    def delta(cls, b: int, ell: int, m: int, value: complex = 1.0, spin: int = 0) -> "Spectrum":
        s = np.zeros((1, b * b), complex)
        s[0, coeff_index(ell, m)] = value
        return cls(s, spin)


def random_spectrum(b: int, rng: np.random.Generator, channels: int = 1,
                    real: bool = True, spin: int = 0) -> Spectrum:
    """Random band-limited spectrum; ``real`` enforces the real-signal symmetry."""
    c = rng.standard_normal((channels, b * b)) + 1j * rng.standard_normal((channels, b * b))
    ells, ms = degrees_and_orders(b)
    if real:
        if spin:
            raise ValueError("real symmetry only applies to spin 0")
        neg = ms < 0
        mirror = coeff_index(ells[neg], -ms[neg])
        c[:, neg] = (-1.0) ** ms[neg] * np.conj(c[:, mirror])
        c[:, ms == 0] = c[:, ms == 0].real
    c[:, ells < abs(spin)] = 0.0
    return Spectrum(c, spin)


def map_channels(fn: Callable[[np.ndarray], np.ndarray], data: np.ndarray,
                 workers: int = 1) -> np.ndarray:
    """Apply ``fn`` to each channel separately and stack the results.

    Each channel goes through the same code path whatever ``workers`` is, so
    outputs are bitwise independent of the worker count.
    """
    if workers <= 1:
        out = [fn(x) for x in data]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(fn, data))
    return np.stack(out)


# ---------------------------------------------------------------------------
# rotations


def sph2cart(theta, phi) -> np.ndarray:
    theta = np.asarray(theta, float)
    phi = np.asarray(phi, float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def cart2sph(v) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(v, float)
    rho = np.hypot(v[..., 0], v[..., 1])
    theta = np.arctan2(rho, v[..., 2])
    phi = np.mod(np.arctan2(v[..., 1], v[..., 0]), TWO_PI)
    return theta, phi


def rot_z(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_y(b: float) -> np.ndarray:
    c, s = np.cos(b), np.sin(b)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


_GIMBAL_TOL = 1e-12


@dataclass(frozen=True)
class RotationZYZ:
    """Canonical ZYZ Euler triple, ``alpha, gamma in [0, 2pi)``, ``beta in [0, pi]``.

    At ``beta`` in ``{0, pi}`` only ``alpha +/- gamma`` is defined; the canonical
    form folds everything into ``alpha`` and sets ``gamma = 0``.
    """

    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        a, b, g = float(self.alpha), float(self.beta), float(self.gamma)
        if not (-_GIMBAL_TOL <= b <= np.pi + _GIMBAL_TOL):
            raise ValueError(f"beta must lie in [0, pi], got {b}")
        b = min(max(b, 0.0), np.pi)
        if b <= _GIMBAL_TOL:
            a, b, g = a + g, 0.0, 0.0
        elif np.pi - b <= _GIMBAL_TOL:
            a, b, g = a - g, np.pi, 0.0
        object.__setattr__(self, "alpha", _wrap(a))
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "gamma", _wrap(g))

    @classmethod
    def identity(cls) -> "RotationZYZ":
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_matrix(cls, r) -> "RotationZYZ":
        r = np.asarray(r, float)
        beta = np.arctan2(np.hypot(r[0, 2], r[1, 2]), r[2, 2])
        if beta <= _GIMBAL_TOL:
            return cls(np.arctan2(r[1, 0], r[0, 0]), 0.0, 0.0)
        if np.pi - beta <= _GIMBAL_TOL:
            # Rz(a) Ry(pi) = [[-cos a, -sin a, 0], [-sin a, cos a, 0], [0, 0, -1]]
            return cls(np.arctan2(-r[1, 0], r[1, 1]), np.pi, 0.0)
        alpha = np.arctan2(r[1, 2], r[0, 2])
        gamma = np.arctan2(r[2, 1], -r[2, 0])
        return cls(alpha, beta, gamma)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "RotationZYZ":
        """Haar-uniform random rotation."""
        q = rng.standard_normal(4)
        q /= np.linalg.norm(q)
        return cls.from_matrix(_quat_to_matrix(q))

    def matrix(self) -> np.ndarray:
        return rot_z(self.alpha) @ rot_y(self.beta) @ rot_z(self.gamma)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.alpha, self.beta, self.gamma)

    def __matmul__(self, other: "RotationZYZ") -> "RotationZYZ":
        return rotation_compose(self, other)


def _wrap(a: float) -> float:
    a = float(np.mod(a, TWO_PI))
    return 0.0 if a >= TWO_PI else a


def _quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def rotation_compose(g1: RotationZYZ, g2: RotationZYZ) -> RotationZYZ:
    """Rotation whose matrix is ``matrix(g1) @ matrix(g2)``."""
    if g1.beta == 0.0 and g2.beta == 0.0:
        return RotationZYZ(g1.alpha + g2.alpha, 0.0, 0.0)
    return RotationZYZ.from_matrix(g1.matrix() @ g2.matrix())


def rotation_inverse(g: RotationZYZ) -> RotationZYZ:
    # (Rz(a) Ry(b) Rz(c))^-1 = Rz(-c) Ry(-b) Rz(-a) = Rz(pi - c) Ry(b) Rz(-pi - a)
    if g.beta in (0.0, np.pi):
        if g.beta == 0.0:
            return RotationZYZ(-g.alpha, 0.0, 0.0)
        return RotationZYZ(g.alpha, np.pi, 0.0)
    return RotationZYZ(np.pi - g.gamma, g.beta, -np.pi - g.alpha)


def rotation_angle(g: RotationZYZ | np.ndarray) -> float:
    """Geodesic angle of a rotation (its angle about its own axis)."""
    r = g.matrix() if isinstance(g, RotationZYZ) else np.asarray(g)
    c = np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)
    # arccos is ill-conditioned near 0; use the skew part there
    s = np.linalg.norm([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]]) / 2.0
    return float(np.arctan2(s, c))


def rotation_distance(g1: RotationZYZ, g2: RotationZYZ) -> float:
    """Geodesic distance on SO(3) in radians."""
    return rotation_angle(g1.matrix().T @ g2.matrix())
