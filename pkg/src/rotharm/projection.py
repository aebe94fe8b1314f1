"""Mesh loading and ray-cast projection of shapes onto the spherical grid.

Rays leave the bounding-sphere center along every grid direction. Channel 0
is the distance to the farthest hit divided by the bounding radius, channel 1
is ``sin`` of the angle between ray and surface normal. Rays that miss give
``(0, 0)``. Star shape and watertightness are not checked.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import SphericalSignal, make_grid, sph2cart

RAY_EPS = 1e-9
DEDUPE_TOL = 1e-7


@dataclass(frozen=True)
class TriMesh:
    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, float).reshape(-1, 3)
        t = np.asarray(self.triangles, np.int64).reshape(-1, 3)
        if len(t) and (t.min() < 0 or t.max() >= len(v)):
            raise ValueError("triangle index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @property
    def face_normals(self) -> np.ndarray:
        a, b, c = (self.vertices[self.triangles[:, i]] for i in range(3))
        n = np.cross(b - a, c - a)
        norm = np.linalg.norm(n, axis=1, keepdims=True)
        return np.divide(n, norm, out=np.zeros_like(n), where=norm > 0)

    @property
    def degenerate(self) -> np.ndarray:
        """Mask of faces with (numerically) zero area."""
        a, b, c = (self.vertices[self.triangles[:, i]] for i in range(3))
        return np.linalg.norm(np.cross(b - a, c - a), axis=1) < 1e-14

    def corner_normals(self, crease_deg: float = 60.0) -> np.ndarray:
        """Per-corner normals ``(T, 3, 3)`` averaged over faces meeting at the vertex.

        Only faces whose normal is within ``crease_deg`` of the corner's own
        face contribute, so sharp edges keep flat shading.
        """
        fn = self.face_normals
        a, b, c = (self.vertices[self.triangles[:, i]] for i in range(3))
        area_n = np.cross(b - a, c - a)  # area-weighted normals
        cos_c = np.cos(np.radians(crease_deg))
        nv = len(self.vertices)
        owners = [[] for _ in range(nv)]
        for f, tri in enumerate(self.triangles):
            for v in tri:
                owners[v].append(f)
        out = np.repeat(fn[:, None, :], 3, axis=1)
        for f, tri in enumerate(self.triangles):
            for k, v in enumerate(tri):
                nb = np.array(owners[v])
                keep = nb[fn[nb] @ fn[f] >= cos_c]
                s = area_n[keep].sum(axis=0)
                norm = np.linalg.norm(s)
                if norm > 0:
                    out[f, k] = s / norm
        return out

    def transformed(self, R: np.ndarray, t=(0.0, 0.0, 0.0)) -> "TriMesh":
        return TriMesh(self.vertices @ np.asarray(R).T + np.asarray(t), self.triangles)


# ---------------------------------------------------------------------------
# OBJ


def _face_index(tok: str, nverts: int, lineno: int) -> int:
    head = tok.split("/")[0]
    try:
        i = int(head)
    except ValueError:
        raise ValueError(f"line {lineno}: bad face index {tok!r}") from None
    if i == 0:
        raise ValueError(f"line {lineno}: face index 0 is not valid in OBJ")
    i = i - 1 if i > 0 else nverts + i
    if not 0 <= i < nverts:
        raise ValueError(f"line {lineno}: face index {tok!r} refers to a missing vertex")
    return i


def parse_obj(text: str) -> TriMesh:
    verts, tris = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise ValueError(f"line {lineno}: vertex needs three coordinates")
            try:
                verts.append([float(x) for x in parts[1:4]])
            except ValueError:
                raise ValueError(f"line {lineno}: bad vertex coordinate") from None
        elif tag == "f":
            if len(parts) < 4:
                raise ValueError(f"line {lineno}: face needs at least three vertices")
            idx = [_face_index(p, len(verts), lineno) for p in parts[1:]]
            # fan triangulation
            for k in range(1, len(idx) - 1):
                tris.append([idx[0], idx[k], idx[k + 1]])
        # normals, texture coordinates, groups and materials are ignored
    if not verts or not tris:
        raise ValueError("OBJ data contains no triangles")
    return TriMesh(np.array(verts), np.array(tris))


def load_obj(path) -> TriMesh:
    return parse_obj(Path(path).read_text())


def to_obj(m: TriMesh) -> str:
    lines = [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in m.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in m.triangles]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# simple meshes


def cube_mesh(size: float = 1.0) -> TriMesh:
    h = size / 2
    v = np.array([[x, y, z] for x in (-h, h) for y in (-h, h) for z in (-h, h)])
    quads = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
    tris = [[q[0], q[k], q[k + 1]] for q in quads for k in (1, 2)]
    return TriMesh(v, tris)


def icosphere(subdivisions: int = 3, radius: float = 1.0) -> TriMesh:
    p = (1 + np.sqrt(5)) / 2
    v = [[-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0], [0, -1, p], [0, 1, p],
         [0, -1, -p], [0, 1, -p], [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1]]
    f = [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11], [1, 5, 9], [5, 11, 4],
         [11, 10, 2], [10, 7, 6], [7, 1, 8], [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8],
         [3, 8, 9], [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]]
    verts = [np.array(x, float) / np.linalg.norm(x) for x in v]
    for _ in range(subdivisions):
        cache: dict = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        nf = []
        for a, b, c in f:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            nf += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        f = nf
    return TriMesh(np.array(verts) * radius, f)


def star_mesh(subdivisions: int = 4, amplitude: float = 0.25, seed: int = 0) -> TriMesh:
    """Icosphere with a smooth random radial bump, star-shaped about the origin."""
    rng = np.random.default_rng(seed)
    base = icosphere(subdivisions)
    dirs = rng.standard_normal((4, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    u = base.vertices
    bump = sum(np.exp(4.0 * (u @ d - 1.0)) * w for d, w in zip(dirs, (1.0, -0.6, 0.8, 0.5)))
    return TriMesh(u * (1.0 + amplitude * bump)[:, None], base.triangles)


# ---------------------------------------------------------------------------
# bounding sphere (exact minimal enclosing ball)


@dataclass(frozen=True)
class BoundingSphere:
    center: np.ndarray
    radius: float


def _ball(points: list) -> tuple[np.ndarray, float]:
    P = np.array(points, float)
    if len(P) == 1:
        return P[0], 0.0
    if len(P) == 2:
        c = P.mean(axis=0)
        return c, float(np.linalg.norm(P[0] - c))
    # center in the affine span, equidistant from all support points
    A = P[1:] - P[0]
    rhs = 0.5 * np.sum(A * A, axis=1)
    coef, *_ = np.linalg.lstsq(A @ A.T, rhs, rcond=None)
    c = P[0] + coef @ A
    return c, float(np.max(np.linalg.norm(P - c, axis=1)))


def _min_ball(P: np.ndarray, R: list) -> tuple[np.ndarray, float]:
    # iterative form of Welzl's algorithm (one nested loop per boundary point)
    if len(R) == 4:
        return _ball(R)
    if len(R) == 0 and len(P) == 0:
        raise ValueError("empty point set")
    if len(R) == 0:
        c, r = P[0], 0.0
        start = 1
    else:
        c, r = _ball(R)
        start = 0
    scale = 1e-12 * max(1.0, float(np.abs(P).max()) if len(P) else 1.0)
    for i in range(start, len(P)):
        if np.linalg.norm(P[i] - c) > r + scale:
            c, r = _min_ball(P[:i], R + [P[i]])
    return c, r


def bounding_sphere(m: TriMesh | np.ndarray) -> BoundingSphere:
    pts = m.vertices if isinstance(m, TriMesh) else np.asarray(m, float).reshape(-1, 3)
    pts = np.unique(pts, axis=0)
    # a fixed shuffle keeps the expected running time linear and the output reproducible
    pts = pts[np.random.default_rng(0).permutation(len(pts))]
    c, r = _min_ball(pts, [])
    r = float(np.max(np.linalg.norm(pts - c, axis=1)))
    if r <= 0:
        raise ValueError("mesh has zero extent; bounding radius is 0")
    return BoundingSphere(np.asarray(c, float), r)


# ---------------------------------------------------------------------------
# ray casting


def ray_triangle_hits(origin: np.ndarray, dirs: np.ndarray, m: TriMesh,
                      return_uv: bool = False):
    """Moller-Trumbore distances ``t`` for every (ray, triangle); ``nan`` where missed."""
    a, b, c = (m.vertices[m.triangles[:, i]] for i in range(3))
    e1, e2 = b - a, c - a
    pvec = np.cross(dirs[:, None, :], e2[None])
    det = np.einsum("tk,rtk->rt", e1, pvec)
    ok = np.abs(det) > RAY_EPS
    inv = np.divide(1.0, det, out=np.zeros_like(det), where=ok)
    tvec = origin - a
    u = np.einsum("tk,rtk->rt", tvec, pvec) * inv
    qvec = np.cross(tvec, e1)
    v = np.einsum("rk,tk->rt", dirs, qvec) * inv
    t = np.einsum("tk,tk->t", e2, qvec)[None] * inv
    hit = ok & (u >= -RAY_EPS) & (v >= -RAY_EPS) & (u + v <= 1 + RAY_EPS) & (t > RAY_EPS)
    t = np.where(hit, t, np.nan)
    return (t, u, v) if return_uv else t


@dataclass(frozen=True)
class RaycastStats:
    rays: int
    misses: int
    multi_hit: int


def raycast_sphere(m: TriMesh, b: int, jitter: float = 0.0, rng=None,
                   return_stats: bool = False, normals: str = "smooth", chunk: int = 256):
    """Two-channel signal ``[d / R, sin(alpha)]`` from rays through the grid.

    ``normals="smooth"`` interpolates crease-aware corner normals across each
    face (flat faces stay flat); ``normals="face"`` uses the facet normal.
    """
    if normals not in ("smooth", "face"):
        raise ValueError(f"normals must be 'smooth' or 'face', got {normals!r}")
    bs = bounding_sphere(m)
    center = bs.center.copy()
    if jitter:
        rng = np.random.default_rng(0) if rng is None else rng
        d = rng.standard_normal(3)
        center = center + jitter * bs.radius * d / np.linalg.norm(d)
    T, P = make_grid(b).mesh()
    dirs = sph2cart(T, P).reshape(-1, 3)
    corner = m.corner_normals() if normals == "smooth" else None
    fnorm = m.face_normals
    dist = np.zeros(len(dirs))
    sina = np.zeros(len(dirs))
    multi = 0
    for s in range(0, len(dirs), chunk):
        D = dirs[s:s + chunk]
        t, u, v = ray_triangle_hits(center, D, m, return_uv=True)
        has = ~np.all(np.isnan(t), axis=1)
        tf = np.where(np.isnan(t), -np.inf, t)
        far = np.argmax(tf, axis=1)
        rows = np.nonzero(has)[0]
        dist[s + rows] = tf[rows, far[rows]]
        fi = far[rows]
        if corner is None:
            n = fnorm[fi]
        else:
            uu, vv = u[rows, fi][:, None], v[rows, fi][:, None]
            n = (1 - uu - vv) * corner[fi, 0] + uu * corner[fi, 1] + vv * corner[fi, 2]
            n /= np.linalg.norm(n, axis=1, keepdims=True)
        cosang = np.abs(np.einsum("rk,rk->r", D[rows], n))
        sina[s + rows] = np.sqrt(np.clip(1.0 - cosang ** 2, 0.0, 1.0))
        # hits on shared edges count once
        for r in rows:
            q = np.unique(np.round(t[r][~np.isnan(t[r])] / DEDUPE_TOL))
            multi += len(q) > 1
    data = np.stack([dist / bs.radius, sina]).reshape(2, 2 * b, 2 * b)
    sig = SphericalSignal(data)
    if return_stats:
        misses = int(np.sum(dist == 0))
        return sig, RaycastStats(len(dirs), misses, int(multi))
    return sig
