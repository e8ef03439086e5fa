"""Command-line front end.

    lyapcat check {monovariant,attractor,equilibrium,delta,lyapunov} --system FILE ...
    lyapcat converse --system FILE --certificate FILE --out FILE
    lyapcat export {trajectory,sublevel-raster,ball-raster} --system FILE --out FILE ...

``check`` and ``converse`` print a JSON report. Exit codes: 0 pass, 1 fail,
2 usage or parse error.
"""

from __future__ import annotations

import argparse
import csv
import enum
import hashlib
import json
import math
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import certificates as certs
from .fileformat import FormatError, dump_certificate, parse_certificate, parse_system
from .monovariant import BallFamily, Direction, check_attractor, check_monovariant
from .system import UnsupportedExactReach, as_vector, evolve, is_equilibrium, rational
from .verdict import Verdict

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DEFAULT_HORIZON = 10


class UsageError(Exception):
    pass


def to_json(value):
    """Exact rationals become "p/q" strings; sets become sorted lists."""
    if isinstance(value, Verdict):
        return {"status": value.status.value, "detail": value.detail,
                "witness": to_json(value.witness)}
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, Fraction):
        return int(value) if value.denominator == 1 else str(value)
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        return "inf" if value == math.inf else value
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {str(k): to_json(v) for k, v in value.items()}
    if isinstance(value, (frozenset, set)):
        return [to_json(v) for v in sorted(value)]
    if isinstance(value, (list, tuple)):
        return [to_json(v) for v in value]
    return str(value)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as err:
        raise UsageError(f"cannot read {path}: {err}") from err


def _digest(*texts) -> str:
    h = hashlib.sha256()
    for t in texts:
        h.update(t.encode())
        h.update(b"\0")
    return h.hexdigest()


def _grid(text):
    if text is None:
        return None
    try:
        values = [rational(v) for v in text.split(",") if v.strip()]
    except (ValueError, ZeroDivisionError) as err:
        raise UsageError(f"bad grid {text!r}") from err
    if not values or values[0] <= 0 or any(b <= a for a, b in zip(values, values[1:])):
        raise UsageError(f"grid {text!r} must be positive and strictly increasing")
    return tuple(values)


def _samples(system, n_random: int, seed: int, box=2):
    """Lattice on [-box, box]^d (d <= 2) plus ``n_random`` seeded rational points."""
    if system.is_finite:
        return None
    dim = system.space.dim
    pts = set()
    if dim <= 2:
        ticks = [Fraction(k, 4) for k in range(-4 * box, 4 * box + 1)]
        if dim == 1:
            pts.update((t,) for t in ticks)
        else:
            pts.update((a, b) for a in ticks for b in ticks)
    rng = random.Random(seed)
    count = n_random if dim <= 2 else max(n_random, 200)
    for _ in range(count):
        pts.add(tuple(Fraction(rng.randint(-64 * box, 64 * box), 64) for _ in range(dim)))
    return sorted(pts)


def _lookup(mapping, name, what):
    if name is None:
        raise UsageError(f"--{what} is required")
    if name not in mapping:
        raise UsageError(f"unknown {what} {name!r}; known: {', '.join(sorted(mapping)) or 'none'}")
    return mapping[name]


def _point(sysfile, name):
    if name is None:
        raise UsageError("--point is required")
    if name in sysfile.points:
        return sysfile.points[name]
    try:
        if sysfile.system.is_finite:
            return int(name)
        return tuple(rational(v) for v in name.split(","))
    except ValueError as err:
        raise UsageError(f"unknown point {name!r}") from err


def _report(command, digest, verdict: Verdict, started, seed, **extra):
    return {
        "command": command,
        "inputs_digest": digest,
        "verdict": verdict.status.value,
        "detail": verdict.detail,
        "witnesses": [to_json(verdict.witness)] if verdict.witness is not None else [],
        "seed": seed,
        **{k: to_json(v) for k, v in extra.items()},
        "timings": {"total_seconds": round(time.perf_counter() - started, 6)},
    }


def _emit(report, out):
    text = json.dumps(report, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


# -- commands -------------------------------------------------------------------------

def cmd_check(args) -> int:
    started = time.perf_counter()
    sys_text = _read(args.system)
    sysfile = parse_system(sys_text)
    system = sysfile.system
    texts = [sys_text]
    horizon = args.horizon
    if horizon is None and not system.is_finite:
        horizon = DEFAULT_HORIZON
    samples = _samples(system, args.samples, args.seed)
    tol = args.tol
    extra = {}
    if args.kind == "monovariant":
        obs = _lookup(sysfile.observables, args.observable, "observable")
        verdict = check_monovariant(system, obs, Direction(args.direction), horizon=horizon,
                                    samples=samples, tol=tol)
        extra["direction"] = args.direction
        extra["observable"] = obs.name
    elif args.kind == "attractor":
        verdict = check_attractor(system, _point(sysfile, args.point), horizon=horizon,
                                  samples=samples, tol=tol)
    elif args.kind == "equilibrium":
        verdict = is_equilibrium(system, [_point(sysfile, args.point)], args.horizon)
    else:
        if args.certificate is None:
            raise UsageError("--certificate is required")
        cert_text = _read(args.certificate)
        texts.append(cert_text)
        cert = parse_certificate(cert_text, sysfile)
        grid = _grid(args.grid)
        if args.kind == "delta":
            if not isinstance(cert, certs.DeltaCertificate):
                raise UsageError("check delta needs a delta certificate")
            if grid:
                cert = certs.DeltaCertificate(cert.x_star, cert.delta, grid, cert.horizon)
            if not system.is_finite and args.horizon is None and cert.horizon is not None:
                horizon = cert.horizon
            verdict = certs.verify_delta(system, cert, horizon=horizon,
                                         tol=tol, jobs=args.jobs)
        elif args.kind == "lyapunov":
            if not isinstance(cert, certs.LyapunovCertificate):
                raise UsageError("check lyapunov needs a Lyapunov certificate")
            if grid:
                cert = certs.LyapunovCertificate(cert.x_star, cert.levels.restrict(grid),
                                                 cert.inner, cert.outer)
            verdict = certs.verify_lyapunov(system, cert, horizon=horizon,
                                            tol=tol, jobs=args.jobs)
        extra["global"] = certs.check_global(cert).passed
    _emit(_report(f"check {args.kind}", _digest(*texts), verdict, started, args.seed,
                  horizon=horizon, **extra), args.out)
    return EXIT_PASS if verdict else EXIT_FAIL


def cmd_converse(args) -> int:
    started = time.perf_counter()
    sys_text, cert_text = _read(args.system), _read(args.certificate)
    sysfile = parse_system(sys_text)
    system = sysfile.system
    cert = parse_certificate(cert_text, sysfile)
    if not isinstance(cert, certs.DeltaCertificate):
        raise UsageError("converse needs a delta certificate")
    if not system.is_finite and args.horizon is None and cert.horizon is None:
        raise UsageError("converse on a Euclidean system needs --horizon")
    digest = _digest(sys_text, cert_text)
    checked = certs.verify_delta(system, cert, horizon=args.horizon)
    if not checked:
        _emit(_report("converse", digest, checked, started, args.seed), None)
        return EXIT_FAIL
    lyap = certs.converse_construct(system, cert, horizon=args.horizon)
    verdict = lyap.notes["verdict"]
    if system.is_finite:
        Path(args.out).write_text(dump_certificate(lyap))
        written = args.out
    else:
        written = None  # sampled point clouds have no file representation
    _emit(_report("converse", digest, verdict, started, args.seed, written=written,
                  construction=lyap.notes["construction"]), None)
    return EXIT_PASS if verdict else EXIT_FAIL


def _axis(text, resolution):
    try:
        lo, hi = (rational(v) for v in text.split(","))
    except ValueError as err:
        raise UsageError(f"bad --range {text!r}; expected lo,hi") from err
    if resolution < 1 or hi < lo or (resolution == 1 and hi != lo):
        raise UsageError("empty raster grid")
    if resolution == 1:
        return [lo]
    return [lo + (hi - lo) * k / (resolution - 1) for k in range(resolution)]


def _fmt(v):
    return str(to_json(v))


def cmd_export(args) -> int:
    sysfile = parse_system(_read(args.system))
    system = sysfile.system
    rows = []
    if args.what == "trajectory":
        if args.start is None:
            raise UsageError("--start is required")
        x = int(args.start) if system.is_finite else tuple(rational(v) for v in args.start.split(","))
        obs = sysfile.observables.get(args.observable) if args.observable else None
        if args.observable and obs is None:
            raise UsageError(f"unknown observable {args.observable!r}")
        dim = 1 if system.is_finite else system.space.dim
        header = ["step"] + [f"x{i}" for i in range(dim)] + (["value"] if obs else [])
        for k in range(args.steps + 1):
            t = (0,) * k if system.timeline.is_word else k
            y = evolve(system, x, t)
            comps = [y] if system.is_finite else list(y)
            rows.append([k] + [_fmt(c) for c in comps] + ([_fmt(obs(y))] if obs else []))
    else:
        if system.is_finite:
            raise UsageError("rasters need a Euclidean system")
        dim = system.space.dim
        if dim > 2:
            raise UsageError("rasters need dimension <= 2")
        axis = _axis(args.range, args.resolution)
        if args.what == "sublevel-raster":
            obs = _lookup(sysfile.observables, args.observable, "observable")
            level = rational(args.level)
            member = lambda p: obs(p) <= level
            value = obs
        else:
            center = _point(sysfile, args.point)
            radius = rational(args.level)
            balls = BallFamily(system.space, center)
            member = lambda p: balls.contains(radius, p)
            value = lambda p: system.space.distance(as_vector(center), p)
        header = ["x"] + (["y"] if dim == 2 else []) + ["value", "member"]
        grid = [(a,) for a in axis] if dim == 1 else [(a, b) for a in axis for b in axis]
        for p in grid:
            rows.append([_fmt(c) for c in p] + [_fmt(value(p)), int(member(p))])
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lyapcat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--system", required=True, help="system description file")
        p.add_argument("--horizon", type=int, help="bound on time steps (Euclidean checks)")
        p.add_argument("--seed", type=int, default=0, help="seed for sample generation")
        p.add_argument("--jobs", type=int, default=1, help="threads for per-radius loops")

    check = sub.add_parser("check", help="verify a property or certificate")
    check.add_argument("kind", choices=["monovariant", "attractor", "equilibrium",
                                        "delta", "lyapunov"])
    common(check)
    check.add_argument("--certificate")
    check.add_argument("--observable")
    check.add_argument("--point")
    check.add_argument("--direction", choices=[d.value for d in Direction],
                       default=Direction.DECREASING.value)
    check.add_argument("--grid", help="comma separated radii overriding the certificate grid")
    check.add_argument("--samples", type=int, default=0,
                       help="extra random sample states (Euclidean systems)")
    check.add_argument("--tol", type=float, default=0.0)
    check.add_argument("--out", help="also write the JSON report here")
    check.set_defaults(func=cmd_check)

    conv = sub.add_parser("converse", help="build a Lyapunov certificate from a delta certificate")
    common(conv)
    conv.add_argument("--certificate", required=True)
    conv.add_argument("--out", required=True)
    conv.set_defaults(func=cmd_converse)

    exp = sub.add_parser("export", help="write plot-ready CSV")
    exp.add_argument("what", choices=["trajectory", "sublevel-raster", "ball-raster"])
    common(exp)
    exp.add_argument("--start", help="initial state (index or comma separated vector)")
    exp.add_argument("--steps", type=int, default=10)
    exp.add_argument("--observable")
    exp.add_argument("--point")
    exp.add_argument("--level", default="1", help="sublevel threshold or ball radius")
    exp.add_argument("--range", default="-2,2", help="raster axis range lo,hi")
    exp.add_argument("--resolution", type=int, default=41, help="raster points per axis")
    exp.add_argument("--out", required=True)
    exp.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, UsageError, UnsupportedExactReach, certs.CertificateError) as err:
        print(f"lyapcat: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
