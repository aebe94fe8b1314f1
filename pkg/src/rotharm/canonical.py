"""Log-polar canonical coordinates for rotation and dilation about an origin.

Output row ``y`` is the angle ``2 pi y / H`` and column ``x`` the radius
``r^(x / W)``, so rotations about the origin become circular row shifts and
dilations become column shifts of ``W ln(sigma) / ln(r)``.
Images are indexed ``[row, col]``; a point ``(x, y)`` means ``(col, row)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates


@dataclass(frozen=True)
class PolarImage:
    """``(C, H, W)`` table: rows are angle (periodic), columns are log-radius."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data)
        if d.ndim == 2:
            d = d[None]
        if d.ndim != 3 or min(d.shape) < 1:
            raise ValueError(f"expected (C, H, W) polar samples, got {d.shape}")
        object.__setattr__(self, "data", d)


def _as_stack(img) -> tuple[np.ndarray, bool]:
    if isinstance(img, PolarImage):
        return np.asarray(img.data, float), False
    img = np.asarray(img, float)
    if img.ndim == 2:
        return img[None], True
    if img.ndim != 3:
        raise ValueError(f"expected (H, W) or (C, H, W) image, got {img.shape}")
    return img, False


def default_radius(shape) -> float:
    h, w = shape[-2:]
    return 0.5 * float(np.hypot(h, w))


def logpolar_coords(origin, out_shape, r: float) -> tuple[np.ndarray, np.ndarray]:
    """Source ``(x_s, y_s)`` for every output node, each of shape ``out_shape``."""
    H, W = out_shape
    x0, y0 = origin
    yt, xt = np.meshgrid(np.arange(H), np.arange(W), indexing="ij")
    rho = r ** (xt / W)
    ang = 2 * np.pi * yt / H
    return x0 + rho * np.cos(ang), y0 + rho * np.sin(ang)


def logpolar(img, origin, out_shape, r: float | None = None) -> np.ndarray:
    """Bilinear log-polar resampling; samples outside the image are zero."""
    stack, single = _as_stack(img)
    H, W = out_shape
    if H < 1 or W < 1:
        raise ValueError(f"output shape must be positive, got {out_shape}")
    h_in, w_in = stack.shape[1:]
    x0, y0 = origin
    if not (0 <= x0 <= w_in - 1 and 0 <= y0 <= h_in - 1):
        raise ValueError(f"origin {origin} lies outside the {h_in}x{w_in} image")
    r = default_radius(stack.shape) if r is None else float(r)
    if r <= 1:
        raise ValueError("maximum radius must exceed one pixel")
    xs, ys = logpolar_coords(origin, out_shape, r)
    out = np.stack([map_coordinates(ch, [ys, xs], order=1, mode="constant", cval=0.0)
                    for ch in stack])
    return out[0] if single else out


def wrap_pad(p, pad: int) -> np.ndarray:
    """Circular padding along rows (angle), zero padding along columns (radius)."""
    stack, single = _as_stack(p)
    if pad < 0:
        raise ValueError("pad must be non-negative")
    if pad > stack.shape[1]:
        raise ValueError("pad larger than the angle axis")
    out = np.pad(stack, ((0, 0), (pad, pad), (0, 0)), mode="wrap")
    out = np.pad(out, ((0, 0), (0, 0), (pad, pad)), mode="constant")
    return out[0] if single else out


def shift_columns(p: np.ndarray, dc: int) -> np.ndarray:
    """Shift along the radius axis with zero fill (positive moves right)."""
    out = np.zeros_like(p)
    W = p.shape[-1]
    if dc >= 0:
        out[..., dc:] = p[..., : W - dc]
    else:
        out[..., : W + dc] = p[..., -dc:]
    return out


def canonical_shift_check(p1, p2, max_col_shift: int | None = None):
    """Exhaustive search for ``p2 ~ roll(p1, dr rows)`` shifted by ``dc`` columns.

    Returns ``(dr, dc, residual)`` where the residual is the mean absolute
    difference over the columns both images cover. Ties keep the smallest
    ``|dc|``, then the smallest ``dr``.
    """
    a, _ = _as_stack(p1)
    b, _ = _as_stack(p2)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    H, W = a.shape[1:]
    lim = W // 2 if max_col_shift is None else int(max_col_shift)
    best = (0, 0, np.inf)
    for dc in sorted(range(-lim, lim + 1), key=abs):
        lo, hi = max(0, dc), min(W, W + dc)
        if hi - lo < 1:
            continue
        shifted = shift_columns(a, dc)[..., lo:hi]
        target = b[..., lo:hi]
        for dr in range(H):
            res = float(np.mean(np.abs(np.roll(shifted, dr, axis=1) - target)))
            if res < best[2] - 1e-15:
                best = (dr, dc, res)
    return best


def dilation_column_shift(sigma: float, W: int, r: float) -> float:
    return W * np.log(sigma) / np.log(r)


def rotation_row_shift(angle: float, H: int) -> float:
    return H * angle / (2 * np.pi)
