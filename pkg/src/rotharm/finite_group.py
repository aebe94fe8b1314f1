"""Icosahedral rotation group, exact group convolutions and homogeneous spaces.

Signals on a finite domain are arrays of shape ``(|domain|, channels)``.
Group-level operators keep the ``1/|G|`` factor; the homogeneous-space
operators are plain sums without it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

MATCH_TOL = 1e-6
_PHI = (1 + np.sqrt(5)) / 2


def axis_angle_matrix(axis, angle: float) -> np.ndarray:
    a = np.asarray(axis, float)
    a = a / np.linalg.norm(a)
    K = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * (K @ K)


def icosahedron_vertices() -> np.ndarray:
    """The 12 unit vertices, cyclic permutations of ``(0, +-1, +-phi)``."""
    v = []
    for s1 in (1, -1):
        for s2 in (1, -1):
            base = (0.0, s1 * 1.0, s2 * _PHI)
            for r in range(3):
                v.append(np.roll(base, r))
    v = np.array(v)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


# generators: 72 degrees about a vertex axis, 120 degrees about a face axis
GEN_VERTEX_AXIS = np.array([0.0, 1.0, _PHI])
GEN_FACE_AXIS = np.array([1.0, 1.0, 1.0])


def _find(mats: np.ndarray, M: np.ndarray) -> tuple[int, float]:
    if len(mats) == 0:
        return -1, np.inf
    dev = np.abs(mats - M).max(axis=(1, 2))
    i = int(np.argmin(dev))
    return (i, float(dev[i])) if dev[i] < MATCH_TOL else (-1, float(dev[i]))


def closure(generators, limit: int = 10_000) -> np.ndarray:
    """Breadth-first closure under right multiplication, identity first."""
    elems = [np.eye(3)]
    stack = np.eye(3)[None]
    head = 0
    while head < len(elems):
        g = elems[head]
        head += 1
        for a in generators:
            M = g @ a
            i, _ = _find(stack, M)
            if i < 0:
                elems.append(M)
                stack = np.concatenate([stack, M[None]])
                if len(elems) > limit:
                    raise RuntimeError("closure did not terminate")
    return np.array(elems)


@dataclass(frozen=True)
class FiniteGroupTable:
    elements: np.ndarray
    cayley: np.ndarray
    inverses: np.ndarray
    max_deviation: float

    @property
    def order(self) -> int:
        return len(self.elements)

    def compose(self, i, j):
        return self.cayley[i, j]

    def angles(self) -> np.ndarray:
        tr = np.trace(self.elements, axis1=1, axis2=2)
        return np.arccos(np.clip((tr - 1) / 2, -1, 1))

    def index_of(self, M) -> int:
        i, dev = _find(self.elements, np.asarray(M, float))
        if i < 0:
            raise ValueError(f"matrix is not a group element (closest deviation {dev:.3g})")
        return i


def group_from_matrices(elems: np.ndarray) -> FiniteGroupTable:
    n = len(elems)
    cayley = np.empty((n, n), dtype=np.int64)
    worst = 0.0
    for i in range(n):
        prods = elems[i] @ elems  # (n, 3, 3): elems[i] @ elems[j]
        dev = np.abs(prods[:, None] - elems[None]).max(axis=(2, 3))
        idx = dev.argmin(axis=1)
        best = dev[np.arange(n), idx]
        if best.max() >= MATCH_TOL:
            raise RuntimeError("element set is not closed under multiplication")
        worst = max(worst, float(best.max()))
        cayley[i] = idx
    inverses = np.argmax(cayley == 0, axis=1)
    return FiniteGroupTable(elems, cayley, inverses, worst)


@lru_cache(maxsize=None)
def build_icosahedral() -> FiniteGroupTable:
    gens = [axis_angle_matrix(GEN_VERTEX_AXIS, 2 * np.pi / 5),
            axis_angle_matrix(GEN_FACE_AXIS, 2 * np.pi / 3)]
    elems = closure(gens)
    if len(elems) != 60:
        raise RuntimeError(f"icosahedral closure produced {len(elems)} elements, expected 60")
    table = group_from_matrices(elems)
    if table.max_deviation >= 1e-9:
        raise RuntimeError(f"Cayley quantization deviation {table.max_deviation:.3g}")
    return table


def element_order(G: FiniteGroupTable, i: int) -> int:
    k, cur = 1, i
    while cur != 0:
        cur = G.cayley[cur, i]
        k += 1
    return k


def tetrahedral_subgroup(G: FiniteGroupTable) -> np.ndarray:
    """Indices of the 12-element subgroup generated by a 3-fold and a 2-fold axis."""
    a = G.index_of(axis_angle_matrix(GEN_FACE_AXIS, 2 * np.pi / 3))
    b = G.index_of(np.diag([1.0, -1.0, -1.0]))
    return generated_subgroup(G, [a, b])


def generated_subgroup(G: FiniteGroupTable, gens) -> np.ndarray:
    seen = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for x in frontier:
            for s in gens:
                y = int(G.cayley[x, s])
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return np.array(sorted(seen))


def export_cayley_csv(G: FiniteGroupTable, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in G.cayley:
            w.writerow(int(v) for v in row)


def read_cayley_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        return np.array([[int(v) for v in row] for row in csv.reader(fh)], dtype=np.int64)


def is_latin_square(T: np.ndarray) -> bool:
    n = len(T)
    full = np.arange(n)
    return all(np.array_equal(np.sort(T[i]), full) for i in range(n)) and \
        all(np.array_equal(np.sort(T[:, j]), full) for j in range(n))


@dataclass(frozen=True)
class GroupSignal:
    """Samples on a finite domain (group or homogeneous space), ``(|domain|, channels)``."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data)
        if d.ndim == 1:
            d = d[:, None]
        if d.ndim != 2 or d.shape[0] < 1 or d.shape[1] < 1:
            raise ValueError(f"expected (|domain|, channels) samples, got {d.shape}")
        object.__setattr__(self, "data", d)


# ---------------------------------------------------------------------------
# homogeneous spaces


@dataclass(frozen=True)
class HSpaceAction:
    """Transitive action ``action[g, x] = index of g . x``; ``origin`` is point 0."""

    points: np.ndarray
    action: np.ndarray
    name: str = ""
    projection: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "projection", self.action[:, 0].copy())

    @property
    def size(self) -> int:
        return len(self.points)


def _orbit(G: FiniteGroupTable, p: np.ndarray) -> np.ndarray:
    pts = []
    for M in G.elements:
        q = M @ p
        if not any(np.abs(q - r).max() < MATCH_TOL for r in pts):
            pts.append(q)
    return np.array(pts)


def hspace(G: FiniteGroupTable, kind: str) -> HSpaceAction:
    """``kind`` is ``"vertices"`` (12), ``"faces"`` (20) or ``"group"`` (60)."""
    if kind == "vertices":
        p = GEN_VERTEX_AXIS / np.linalg.norm(GEN_VERTEX_AXIS)
    elif kind == "faces":
        p = GEN_FACE_AXIS / np.linalg.norm(GEN_FACE_AXIS)
    elif kind == "group":
        # a point with trivial stabilizer
        p = np.array([0.3, 0.5, 0.81])
        p /= np.linalg.norm(p)
    else:
        raise ValueError(f"unknown homogeneous space {kind!r}")
    pts = _orbit(G, p)
    act = np.empty((G.order, len(pts)), dtype=np.int64)
    for gi, M in enumerate(G.elements):
        moved = pts @ M.T
        d = np.abs(moved[:, None] - pts[None]).max(axis=2)
        act[gi] = d.argmin(axis=1)
    return HSpaceAction(pts, act, kind)


# ---------------------------------------------------------------------------
# convolutions


def _as_signal(f, n: int) -> np.ndarray:
    f = np.asarray(f)
    if f.ndim == 1:
        f = f[:, None]
    if f.shape[0] != n:
        raise ValueError(f"signal has {f.shape[0]} samples, domain has {n}")
    return f


def _as_filter(h, n: int, c_in: int) -> np.ndarray:
    h = np.asarray(h)
    if h.ndim == 1:
        h = h[:, None, None] * np.eye(c_in)[None]
    elif h.ndim == 2:
        h = h[:, :, None]
    if h.shape[0] != n or h.shape[1] != c_in:
        raise ValueError(f"filter shape {h.shape} does not match domain {n}, {c_in} channels")
    return h


def left_translate(G: FiniteGroupTable, f, u: int) -> np.ndarray:
    """``(lambda_u f)(g) = f(u^{-1} g)`` on the group."""
    f = np.asarray(f)
    return f[G.cayley[G.inverses[u]]]


def hspace_translate(G: FiniteGroupTable, X: HSpaceAction, f, u: int) -> np.ndarray:
    """``(lambda_u f)(x) = f(u^{-1} x)`` on a homogeneous space."""
    f = np.asarray(f)
    return f[X.action[G.inverses[u]]]


def group_conv(G: FiniteGroupTable, f, h, support=None) -> np.ndarray:
    """``out_j(y) = (1/|G|) sum_g sum_i f_i(g) h_ij(g^{-1} y)``.

    ``support`` restricts the sum to filter arguments ``g^{-1} y`` in that set.
    """
    n = G.order
    f = _as_signal(f, n)
    h = _as_filter(h, n, f.shape[1])
    if support is not None:
        mask = np.zeros(n, bool)
        mask[np.asarray(support)] = True
        h = h * mask[:, None, None]
    # arg[g, y] = index of g^{-1} y
    arg = G.cayley[G.inverses]
    hg = h[arg]  # (g, y, i, j)
    return np.einsum("gi,gyij->yj", f, hg) / n


def group_corr(G: FiniteGroupTable, f, h) -> np.ndarray:
    """``out_i(k) = (1/|G|) sum_g sum_j f_j(k g) h_ji(g)``."""
    n = G.order
    f = _as_signal(f, n)
    h = _as_filter(h, n, f.shape[1])
    fk = f[G.cayley]  # (k, g, j)
    return np.einsum("kgj,gji->ki", fk, h) / n


def hspace_conv(G: FiniteGroupTable, X: HSpaceAction, f, h) -> np.ndarray:
    """``out_j(y) = sum_g sum_i f_i(g nu) h_ij(g^{-1} y)``, output on ``X``."""
    f = _as_signal(f, X.size)
    h = _as_filter(h, X.size, f.shape[1])
    fg = f[X.projection]  # (g, i)
    hg = h[X.action[G.inverses]]  # (g, y, i, j)
    return np.einsum("gi,gyij->yj", fg, hg)


def hspace_corr(G: FiniteGroupTable, X: HSpaceAction, f, h) -> np.ndarray:
    """``out_j(g) = sum_x sum_i f_i(g x) h_ij(x)``, output on the group."""
    f = _as_signal(f, X.size)
    h = _as_filter(h, X.size, f.shape[1])
    fg = f[X.action]  # (g, x, i)
    return np.einsum("gxi,xij->gj", fg, h)


# ---------------------------------------------------------------------------
# localized supports


def localized_support(G: FiniteGroupTable, size: int) -> np.ndarray:
    """Identity plus the smallest rotations by angle, ties broken by index."""
    if not 1 <= size <= G.order:
        raise ValueError(f"support size must be in [1, {G.order}]")
    ang = np.round(G.angles(), 9)
    order = np.lexsort((np.arange(G.order), ang))
    return np.sort(order[:size])


def support_spans(G: FiniteGroupTable, S) -> bool:
    """True if products of elements of ``S`` reach the whole group."""
    return len(generated_subgroup(G, [int(s) for s in S])) == G.order
