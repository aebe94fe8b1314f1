"""Command-line front end: ``rotharm <command> [options]``.

Every command prints a report (``key: value`` lines, or one JSON object with
``--json``) and exits 0. Failures print one line ``error: <Type>: <message>``
(or a JSON object with ``"ok": false``) to stderr and exit 1; usage errors
exit 2. The report fields are described in ``docs/report_schema.md``.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import signal_io
from .canonical import PolarImage
from .core import SphericalSignal, Spectrum, random_spectrum
from .equivariance import equivariance_report
from .finite_group import (
    GroupSignal, build_icosahedral, export_cayley_csv, group_conv, group_corr, hspace,
    hspace_conv, hspace_corr, is_latin_square, localized_support, support_spans,
)
from .projection import load_obj, raycast_sphere
from .sft import sample_harmonic, sft_forward, sft_forward_sepvars, sft_inverse
from .so3corr import align
from .sphconv import AnchorFilter, conv, conv_gains, expand_anchors

EXIT_FAIL = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse prints multi-line usage on error; keep it to one line
    def error(self, message):
        raise UsageError(message)


def fmt_euler(angles) -> str:
    return " ".join(f"{a:.9g}" for a in angles)


def _read(path, want, what):
    value = signal_io.read(path)
    if not isinstance(value, want):
        names = want if isinstance(want, tuple) else (want,)
        raise ValueError(f"{what} must hold a {' or '.join(n.__name__ for n in names)}, "
                         f"got {type(value).__name__}")
    return value


def _is_real_spectrum(spec: Spectrum, tol: float = 1e-12) -> bool:
    """True if ``f_{-m}^l = (-1)^m conj(f_m^l)`` for every coefficient."""
    b = spec.b
    ells = np.repeat(np.arange(b), 2 * np.arange(b) + 1)
    ms = np.arange(b * b) - ells * ells - ells
    mirror = ells * ells + ells - ms
    c = spec.coeffs
    err = np.abs(c[:, mirror] - (-1.0) ** ms * np.conj(c)).max()
    return bool(err <= tol * max(1.0, np.abs(c).max()))


def _spectrum_of(value, sepvars: bool = True) -> Spectrum:
    if isinstance(value, Spectrum):
        return value
    return (sft_forward_sepvars if sepvars else sft_forward)(value)


def _truncate(spec: Spectrum, b: int) -> Spectrum:
    if b > spec.b:
        raise ValueError(f"bandwidth {b} exceeds input bandwidth {spec.b}")
    return Spectrum(spec.coeffs[:, : b * b].copy(), spec.spin)


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args) -> dict:
    rng = np.random.default_rng(args.seed)
    if args.kind == "harmonic":
        if not (0 <= args.l < args.bandwidth and abs(args.m) <= args.l):
            raise ValueError(f"need 0 <= l < bandwidth and |m| <= l, got l={args.l} m={args.m}")
        value = sample_harmonic(args.bandwidth, args.l, args.m)
        info = {"l": args.l, "m": args.m}
    elif args.kind == "random-bandlimited":
        band = args.bandwidth if args.band is None else args.band
        if not 1 <= band <= args.bandwidth:
            raise ValueError(f"band must be in [1, {args.bandwidth}], got {band}")
        spec = random_spectrum(band, rng, args.channels, real=True)
        value = sft_inverse(spec, b_out=args.bandwidth, real=True)
        info = {"band": band}
    else:
        value = PolarImage(disk_pattern(args.size, args.disks, rng))
        info = {"size": args.size, "disks": args.disks}
    signal_io.write(args.out, value)
    data = value.data
    return {"kind": args.kind, "out": args.out, "shape": list(data.shape),
            "complex": bool(np.iscomplexobj(data)), **info}


def disk_pattern(size: int, disks: int, rng: np.random.Generator) -> np.ndarray:
    """Random bright disks of random radius and brightness on a dark ``size x size`` image."""
    if size < 8:
        raise ValueError("disk pattern needs size >= 8")
    if disks < 1:
        raise ValueError("need at least one disk")
    yy, xx = np.mgrid[:size, :size].astype(float)
    img = np.zeros((size, size))
    for _ in range(disks):
        cx, cy = rng.uniform(0.15, 0.85, 2) * (size - 1)
        rad = rng.uniform(0.04, 0.15) * size
        img += rng.uniform(0.3, 1.0) * (np.hypot(xx - cx, yy - cy) <= rad)
    return img[None]


def cmd_sft(args) -> dict:
    value = signal_io.read(args.inp)
    if args.inverse:
        if not isinstance(value, Spectrum):
            raise ValueError(f"--inverse needs a spectrum file, got {signal_io.kind_of(value)}")
        if value.spin:
            raise ValueError("spin-weighted spectra are not supported by sft")
        b_out = value.b if args.bandwidth is None else args.bandwidth
        real = _is_real_spectrum(value)
        out = sft_inverse(value, b_out=b_out, truncate=True, real=real)
        rep = {"direction": "inverse", "bandwidth_in": value.b, "bandwidth_out": b_out,
               "real": real}
    else:
        if not isinstance(value, SphericalSignal):
            raise ValueError(f"forward transform needs a spherical signal, "
                             f"got {signal_io.kind_of(value)}")
        out = _spectrum_of(value, args.sepvars)
        if args.bandwidth is not None:
            out = _truncate(out, args.bandwidth)
        rep = {"direction": "forward", "bandwidth_in": value.b, "bandwidth_out": out.b,
               "path": "sepvars" if args.sepvars else "direct"}
    signal_io.write(args.out, out)
    return {**rep, "channels": out.channels if isinstance(out, Spectrum) else value.channels,
            "out": args.out}


def parse_anchors(text: str, b: int) -> AnchorFilter:
    """``"l:v,l:v,..."``; the degree may be written ``b-1`` (or ``b-k``)."""
    degs, vals = [], []
    for item in text.split(","):
        if not item.strip():
            continue
        try:
            d, v = item.split(":")
            d = d.strip()
            degs.append(b - int(d[2:]) if d.startswith("b-") else int(d))
            vals.append(float(v))
        except ValueError:
            raise ValueError(f"bad anchor {item.strip()!r}; expected 'degree:value'") from None
    return AnchorFilter(np.array(degs), np.array(vals))


def cmd_conv(args) -> dict:
    value = _read(args.inp, (SphericalSignal, Spectrum), "--in")
    spec = _spectrum_of(value)
    k = expand_anchors(parse_anchors(args.filter_anchors, spec.b), spec.b)
    out = conv(spec, k)
    if isinstance(value, SphericalSignal):
        out = sft_inverse(out, real=value.is_real)
    signal_io.write(args.out, out)
    return {"bandwidth": spec.b, "channels": spec.channels, "out": args.out,
            "filter": k.k0.tolist(), "gains": (conv_gains(spec.b) * k.k0).tolist()}


def cmd_align(args) -> dict:
    fa = _spectrum_of(_read(args.a, (SphericalSignal, Spectrum), "--a"))
    fb = _spectrum_of(_read(args.b, (SphericalSignal, Spectrum), "--b"))
    if fa.channels != fb.channels:
        raise ValueError(f"channel mismatch: {fa.channels} vs {fb.channels}")
    b = min(fa.b, fb.b) if args.bandwidth is None else args.bandwidth
    fa, fb = _truncate(fa, b), _truncate(fb, b)
    n = 2 * b if args.grid_n is None else args.grid_n
    if n < 2 * b:
        raise ValueError(f"grid-n must be at least 2*bandwidth = {2 * b}")
    res = align(fa, fb, n=n, refine=args.refine)
    return {"euler": fmt_euler(res.rotation.as_tuple()), "score": res.score,
            "spacing": res.spacing, "grid_n": n, "bandwidth": b, "refined": args.refine,
            "ambiguous": res.ambiguous}


def cmd_project(args) -> dict:
    mesh = load_obj(args.obj)
    sig, stats = raycast_sphere(mesh, args.bandwidth, return_stats=True, normals=args.normals)
    signal_io.write(args.out, sig)
    return {"bandwidth": args.bandwidth, "vertices": len(mesh.vertices),
            "triangles": len(mesh.triangles), "rays": stats.rays, "misses": stats.misses,
            "multi_hit": stats.multi_hit, "out": args.out}


def cmd_verify(args) -> dict:
    return equivariance_report(args.pipeline, b=args.bandwidth, trials=args.trials,
                               seed=args.seed, channels=args.channels)


_DOMAINS = {60: "group", 12: "vertices", 20: "faces"}


def cmd_group(args) -> dict:
    G = build_icosahedral()
    if args.op == "cayley":
        if not args.out:
            raise ValueError("--out is required for cayley")
        export_cayley_csv(G, args.out)
        return {"op": "cayley", "order": G.order, "latin_square": is_latin_square(G.cayley),
                "max_deviation": G.max_deviation, "out": args.out}
    if not (args.inp and args.filter and args.out):
        raise ValueError(f"--in, --filter and --out are required for {args.op}")
    f = _read(args.inp, GroupSignal, "--in").data
    h = _read(args.filter, GroupSignal, "--filter").data
    domain = _DOMAINS.get(f.shape[0])
    if domain is None:
        raise ValueError(f"no icosahedral domain has {f.shape[0]} points")
    if h.shape[0] != f.shape[0]:
        raise ValueError(f"filter has {h.shape[0]} points, signal has {f.shape[0]}")
    if h.shape[1] != f.shape[1]:
        raise ValueError("filter needs one column per input channel")
    rep = {"op": args.op, "domain": domain}
    support = None
    if args.support is not None:
        if domain != "group" or args.op != "conv":
            raise ValueError("--support applies to conv on the group domain only")
        support = localized_support(G, args.support)
        spans = support_spans(G, support)
        rep.update(support=support.tolist(), spans=spans)
        if not spans:
            print(f"warning: support of size {args.support} does not span the group",
                  file=sys.stderr)
    if domain == "group":
        op = group_conv if args.op == "conv" else group_corr
        out = op(G, f, h, support) if support is not None else op(G, f, h)
    else:
        X = hspace(G, domain)
        out = (hspace_conv if args.op == "conv" else hspace_corr)(G, X, f, h)
    signal_io.write(args.out, GroupSignal(out))
    return {**rep, "shape": list(out.shape), "out": args.out}


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--json", action="store_true", help="print the report as JSON")

    p = _Parser(prog="rotharm", description="Rotation-equivariant harmonic analysis tools.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", parents=[common], help="generate a test signal")
    g.add_argument("--kind", required=True,
                   choices=["harmonic", "random-bandlimited", "disk-pattern"])
    g.add_argument("--out", required=True)
    g.add_argument("--bandwidth", type=int, default=16)
    g.add_argument("--l", type=int, default=0)
    g.add_argument("--m", type=int, default=0)
    g.add_argument("--band", type=int, default=None, help="degrees kept (default bandwidth)")
    g.add_argument("--channels", type=int, default=1)
    g.add_argument("--size", type=int, default=64)
    g.add_argument("--disks", type=int, default=5)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("sft", parents=[common], help="forward or inverse spherical transform")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--inverse", action="store_true")
    s.add_argument("--sepvars", action="store_true", help="separation-of-variables path")
    s.add_argument("--bandwidth", type=int, default=None)
    s.set_defaults(func=cmd_sft)

    c = sub.add_parser("conv", parents=[common], help="zonal convolution from anchor values")
    c.add_argument("--in", dest="inp", required=True)
    c.add_argument("--filter-anchors", required=True, help='e.g. "0:1,8:0.5,b-1:0"')
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_conv)

    a = sub.add_parser("align", parents=[common], help="rotation aligning two signals")
    a.add_argument("--a", required=True)
    a.add_argument("--b", required=True)
    a.add_argument("--bandwidth", type=int, default=None)
    a.add_argument("--grid-n", type=int, default=None)
    a.add_argument("--refine", action="store_true")
    a.set_defaults(func=cmd_align)

    j = sub.add_parser("project", parents=[common], help="ray-cast an OBJ mesh to the sphere")
    j.add_argument("--obj", required=True)
    j.add_argument("--bandwidth", type=int, default=32)
    j.add_argument("--out", required=True)
    j.add_argument("--normals", choices=["smooth", "face"], default="smooth")
    j.set_defaults(func=cmd_project)

    v = sub.add_parser("verify", parents=[common], help="equivariance error report")
    v.add_argument("--pipeline", required=True, help="e.g. conv,mag,spool")
    v.add_argument("--trials", type=int, default=20)
    v.add_argument("--bandwidth", type=int, default=32)
    v.add_argument("--channels", type=int, default=1)
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("group", parents=[common], help="icosahedral group operations")
    r.add_argument("--op", required=True, choices=["conv", "corr", "cayley"])
    r.add_argument("--in", dest="inp")
    r.add_argument("--filter")
    r.add_argument("--support", type=int, default=None, help="localized filter support size")
    r.add_argument("--out")
    r.set_defaults(func=cmd_group)
    return p


def _plain(value) -> str:
    if isinstance(value, float):
        return f"{value:.9g}"
    if isinstance(value, list) and value and isinstance(value[0], float):
        return " ".join(f"{x:.9g}" for x in value)
    if isinstance(value, list) and value and isinstance(value[0], dict):
        return "; ".join(" ".join(f"{k}={_plain(x)}" for k, x in d.items()) for d in value)
    if isinstance(value, list):
        return " ".join(str(x) for x in value)
    return str(value)


def emit(command: str, report: dict, as_json: bool, out=None) -> None:
    out = sys.stdout if out is None else out
    if as_json:
        print(json.dumps({"command": command, "ok": True, **report}), file=out)
        return
    if command == "align":
        print(report["euler"], file=out)
    for k, v in report.items():
        print(f"{k}: {_plain(v)}", file=out)


def _fail(exc: Exception, as_json: bool) -> None:
    msg = " ".join(str(exc).split()) or type(exc).__name__
    if as_json:
        print(json.dumps({"ok": False, "error": {"type": type(exc).__name__, "message": msg}}),
              file=sys.stderr)
    else:
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    as_json = "--json" in argv
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        _fail(exc, as_json)
        return EXIT_USAGE
    try:
        report = args.func(args)
    except (ValueError, TypeError, OSError, KeyError) as exc:
        _fail(exc, as_json)
        return EXIT_FAIL
    emit(args.command, report, args.json)
    return 0


if __name__ == "__main__":
    sys.exit(main())
