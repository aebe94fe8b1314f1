"""SigFile binary format and CSV export for signals and spectra.

Layout (all integers little-endian):

====== ======= ===========================================================
offset size    field
====== ======= ===========================================================
0      8       magic ``b"SPHSIG1\\0"``
8      4 u32   kind: 1 spherical signal, 2 spectrum, 3 SO(3) signal,
               4 group signal, 5 polar image
12     4 u32   size: bandwidth b (kinds 1, 2), n (3), domain size (4), H (5)
16     4 u32   size2: W for kind 5, otherwise 0
20     4 u32   channels
24     4 u32   flags: bit 0 set means complex payload
28     4 u32   spin count S
32     4*S i32 spin list
...            payload, float64 little-endian, row-major; complex values
               interleave (re, im)
====== ======= ===========================================================

Payload shapes: kind 1 ``(C, 2b, 2b)`` or ``(S, C, 2b, 2b)`` when ``S > 0``;
kind 2 ``(S, C, b*b)`` with ``S >= 1``; kind 3 ``(n, n, n)``; kind 4
``(size, C)``; kind 5 ``(C, H, W)``.
"""

from __future__ import annotations

import csv
import os
import struct
from dataclasses import dataclass

import numpy as np

from .canonical import PolarImage
from .core import SphericalSignal, Spectrum, make_grid
from .finite_group import GroupSignal
from .so3corr import SO3Signal, euler_grid

MAGIC = b"SPHSIG1\0"
KIND_SIGNAL, KIND_SPECTRUM, KIND_SO3, KIND_GROUP, KIND_POLAR = 1, 2, 3, 4, 5
KIND_NAMES = {1: "spherical-signal", 2: "spectrum", 3: "so3-signal", 4: "group-signal",
              5: "polar-image"}
_HEAD = struct.Struct("<8sIIIIII")


class SigFileError(ValueError):
    pass


class MagicError(SigFileError):
    pass


class TruncatedError(SigFileError):
    pass


class SizeMismatchError(SigFileError):
    pass


@dataclass(frozen=True)
class SpinSignal:
    """Samples of several spin weights on one grid: ``{spin: (C, 2b, 2b)}``."""

    grids: dict


@dataclass
class _Packed:
    kind: int
    size: int
    size2: int
    channels: int
    spins: list
    array: np.ndarray  # float64 or complex128, full payload shape


def _shape(kind: int, size: int, size2: int, channels: int, nspin: int) -> tuple:
    if kind == KIND_SIGNAL:
        base = (channels, 2 * size, 2 * size)
        return (nspin,) + base if nspin else base
    if kind == KIND_SPECTRUM:
        return (nspin, channels, size * size)
    if kind == KIND_SO3:
        return (size, size, size)
    if kind == KIND_GROUP:
        return (size, channels)
    if kind == KIND_POLAR:
        return (channels, size, size2)
    raise SigFileError(f"unknown kind {kind}")


def _pack(value) -> _Packed:
    if isinstance(value, SphericalSignal):
        return _Packed(KIND_SIGNAL, value.b, 0, value.channels, [], value.data)
    if isinstance(value, SpinSignal):
        spins = sorted(value.grids)
        arr = np.stack([np.asarray(value.grids[s]).reshape(-1, *np.shape(value.grids[s])[-2:])
                        for s in spins])
        return _Packed(KIND_SIGNAL, arr.shape[-1] // 2, 0, arr.shape[1], spins, arr)
    if isinstance(value, Spectrum):
        return _Packed(KIND_SPECTRUM, value.b, 0, value.channels, [value.spin],
                       value.coeffs[None])
    if isinstance(value, dict) and value and all(isinstance(v, Spectrum) for v in value.values()):
        spins = sorted(value)
        arr = np.stack([value[s].coeffs for s in spins])
        return _Packed(KIND_SPECTRUM, value[spins[0]].b, 0, arr.shape[1], spins, arr)
    if isinstance(value, SO3Signal):
        return _Packed(KIND_SO3, value.n, 0, 1, [], value.data)
    if isinstance(value, GroupSignal):
        return _Packed(KIND_GROUP, value.data.shape[0], 0, value.data.shape[1], [], value.data)
    if isinstance(value, PolarImage):
        C, H, W = value.data.shape
        return _Packed(KIND_POLAR, H, W, C, [], value.data)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _unpack(p: _Packed):
    a = p.array
    if p.kind == KIND_SIGNAL:
        if p.spins:
            return SpinSignal({s: a[i] for i, s in enumerate(p.spins)})
        return SphericalSignal(a)
    if p.kind == KIND_SPECTRUM:
        specs = {s: Spectrum(a[i], s) for i, s in enumerate(p.spins)}
        return specs[p.spins[0]] if len(p.spins) == 1 else specs
    if p.kind == KIND_SO3:
        return SO3Signal(a)
    if p.kind == KIND_GROUP:
        return GroupSignal(a)
    return PolarImage(a)


def to_bytes(value) -> bytes:
    p = _pack(value)
    arr = np.asarray(p.array)
    cplx = np.iscomplexobj(arr)
    arr = np.ascontiguousarray(arr, dtype="<c16" if cplx else "<f8")
    expect = _shape(p.kind, p.size, p.size2, p.channels, len(p.spins))
    if arr.shape != expect:
        raise SizeMismatchError(f"payload shape {arr.shape} does not match header {expect}")
    head = _HEAD.pack(MAGIC, p.kind, p.size, p.size2, p.channels, int(cplx), len(p.spins))
    spins = struct.pack(f"<{len(p.spins)}i", *p.spins)
    return head + spins + arr.tobytes()


def from_bytes(buf: bytes):
    if len(buf) < 8 or buf[:8] != MAGIC:
        raise MagicError("not a SigFile: bad magic")
    if len(buf) < _HEAD.size:
        raise TruncatedError("header is truncated")
    _, kind, size, size2, channels, flags, nspin = _HEAD.unpack_from(buf)
    if kind not in KIND_NAMES:
        raise SigFileError(f"unknown kind {kind}")
    off = _HEAD.size + 4 * nspin
    if len(buf) < off:
        raise TruncatedError("spin list is truncated")
    spins = list(struct.unpack_from(f"<{nspin}i", buf, _HEAD.size))
    if kind == KIND_SPECTRUM and nspin < 1:
        raise SigFileError("spectrum needs at least one spin entry")
    shape = _shape(kind, size, size2, channels, nspin)
    cplx = bool(flags & 1)
    nbytes = int(np.prod(shape)) * (16 if cplx else 8)
    have = len(buf) - off
    if have < nbytes:
        raise TruncatedError(f"payload is truncated: {have} of {nbytes} bytes")
    if have > nbytes:
        raise SizeMismatchError(f"payload has {have} bytes, header implies {nbytes}")
    arr = np.frombuffer(buf, dtype="<c16" if cplx else "<f8", offset=off).reshape(shape)
    arr = arr.astype(np.complex128 if cplx else np.float64)
    return _unpack(_Packed(kind, size, size2, channels, spins, arr))


def write(path, value) -> None:
    data = to_bytes(value)
    # write-then-rename so readers never see a half-written file
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def read(path):
    with open(path, "rb") as fh:
        return from_bytes(fh.read())


def kind_of(value) -> str:
    return KIND_NAMES[_pack(value).kind]


# ---------------------------------------------------------------------------
# CSV


def _index_columns(p: _Packed) -> tuple[list, list]:
    """Column names and one row of index values per payload entry."""
    shape = p.array.shape
    idx = np.indices(shape).reshape(len(shape), -1).T
    if p.kind == KIND_SIGNAL:
        names = (["spin"] if p.spins else []) + ["channel", "j", "k", "theta", "phi"]
        g = make_grid(p.size)
        rows = []
        for r in idx:
            lead = [p.spins[r[0]]] if p.spins else []
            c, j, k = r[-3:]
            rows.append(lead + [c, j, k, repr(float(g.thetas[j])), repr(float(g.phis[k]))])
        return names, rows
    if p.kind == KIND_SPECTRUM:
        rows = []
        for s, c, q in idx:
            ell = int(np.sqrt(q))
            rows.append([p.spins[s], c, ell, q - ell * ell - ell])
        return ["spin", "channel", "l", "m"], rows
    if p.kind == KIND_SO3:
        a, bt, gm = euler_grid(p.size)
        return (["i", "j", "k", "alpha", "beta", "gamma"],
                [[i, j, k, repr(float(a[i])), repr(float(bt[j])), repr(float(gm[k]))]
                 for i, j, k in idx])
    if p.kind == KIND_GROUP:
        return ["element", "channel"], [list(r) for r in idx]
    return ["channel", "row", "col"], [list(r) for r in idx]


def export_csv(value, path) -> None:
    """Write one row per entry: index columns, then ``value`` or ``re, im``.

    The first line is a ``#sigcsv`` comment carrying the header fields.
    """
    p = _pack(value)
    cplx = np.iscomplexobj(p.array)
    names, rows = _index_columns(p)
    flat = p.array.ravel()
    with open(path, "w", newline="") as fh:
        fh.write(f"#sigcsv kind={p.kind} size={p.size} size2={p.size2} channels={p.channels} "
                 f"spins={','.join(str(s) for s in p.spins)} complex={int(cplx)}\n")
        w = csv.writer(fh)
        w.writerow(names + (["re", "im"] if cplx else ["value"]))
        for r, v in zip(rows, flat):
            vals = [repr(float(v.real)), repr(float(v.imag))] if cplx else [repr(float(v))]
            w.writerow(list(r) + vals)


def import_csv(path):
    with open(path, newline="") as fh:
        meta_line = fh.readline()
        if not meta_line.startswith("#sigcsv"):
            raise SigFileError("missing #sigcsv header line")
        meta = dict(tok.split("=", 1) for tok in meta_line.split()[1:])
        reader = csv.reader(fh)
        next(reader)  # column names
        body = list(reader)
    kind, size, size2 = int(meta["kind"]), int(meta["size"]), int(meta["size2"])
    channels = int(meta["channels"])
    spins = [int(s) for s in meta["spins"].split(",") if s]
    cplx = meta["complex"] == "1"
    shape = _shape(kind, size, size2, channels, len(spins))
    n = int(np.prod(shape))
    if len(body) != n:
        raise SizeMismatchError(f"CSV has {len(body)} rows, header implies {n}")
    if cplx:
        vals = np.array([complex(float(r[-2]), float(r[-1])) for r in body])
    else:
        vals = np.array([float(r[-1]) for r in body])
    return _unpack(_Packed(kind, size, size2, channels, spins, vals.reshape(shape)))
