"""Command-line front end emitting machine-readable data for each result class.

All commands express time as the dimensionless product of the waiting-time
rate scale (the first rate of the distribution spec) with physical time, and
emit either RFC-4180-style CSV (with a leading ``#`` comment line carrying
the tool version and the full configuration echo) or JSON.  Identical flags
produce byte-identical output.

Spec syntaxes:
    waiting time   exp:RATE | erlang:M:RATE | conv:R1,R2,...
    channel        phaseflip | ep | mix:NU | pauli:L0,LX,LY,LZ
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .classical_semimarkov import (
    ProbabilityVector,
    SemiMarkovSpec,
    UnstableSolverError,
    witness_contractivity,
)
from .nonmarkov import (
    PairSearchConfig,
    blp_measure_dephasing,
    blp_measure_numeric,
    divisibility_scan,
    hou_measure,
    rhp_divisibility_measure,
    tcl_coefficients,
    tcl_equivalence_check,
)
from .poly_laplace import RootConvergenceError
from .qubit import PauliChannel, QubitState
from .renewal import (
    SeriesTruncationError,
    even_odd_difference,
    find_extrema,
    generating_function,
)
from .waiting_time import HypoExpWTD

__all__ = ["main", "RunConfig", "parse_wtd_spec", "parse_channel_spec"]

EXIT_OK = 0
EXIT_SPEC_ERROR = 2
EXIT_NUMERICAL = 3


class SpecParseError(ValueError):
    pass


def parse_wtd_spec(spec: str) -> HypoExpWTD:
    try:
        kind, _, rest = spec.partition(":")
        if kind == "exp":
            return HypoExpWTD.exponential(float(rest))
        if kind == "erlang":
            m, _, rate = rest.partition(":")
            return HypoExpWTD.erlang(int(m), float(rate))
        if kind == "conv":
            return HypoExpWTD([float(x) for x in rest.split(",")])
    except (ValueError, TypeError) as exc:
        raise SpecParseError(f"bad waiting-time spec {spec!r}: {exc}") from exc
    raise SpecParseError(f"unknown waiting-time spec {spec!r}")


def parse_channel_spec(spec: str) -> PauliChannel:
    try:
        if spec == "phaseflip":
            return PauliChannel.phase_flip()
        if spec == "ep":
            return PauliChannel.exchange()
        kind, _, rest = spec.partition(":")
        if kind == "mix":
            return PauliChannel.dephasing_mixture(float(rest))
        if kind == "pauli":
            return PauliChannel([float(x) for x in rest.split(",")])
    except (ValueError, TypeError) as exc:
        raise SpecParseError(f"bad channel spec {spec!r}: {exc}") from exc
    raise SpecParseError(f"unknown channel spec {spec!r}")


@dataclass
class RunConfig:
    command: str
    options: dict = field(default_factory=dict)

    def echo(self) -> dict:
        return {"command": self.command, **self.options}


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _header_line(cfg: RunConfig) -> str:
    blob = json.dumps(cfg.echo(), sort_keys=True, separators=(",", ":"))
    return f"# smqdyn {__version__} config={blob}"


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    outdir = os.environ.get("SMQDYN_OUTDIR")
    if outdir and not os.path.isabs(path):
        path = os.path.join(outdir, path)
    return open(path, "w", newline=""), True


def _emit_csv(path: str | None, cfg: RunConfig, header: list[str], rows) -> None:
    stream, close = _open_out(path)
    try:
        stream.write(_header_line(cfg) + "\n")
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if close:
            stream.close()


def _emit_json(path: str | None, cfg: RunConfig, payload: dict) -> None:
    doc = {"tool": "smqdyn", "version": __version__, "config": cfg.echo(), **payload}
    stream, close = _open_out(path)
    try:
        stream.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    finally:
        if close:
            stream.close()


def cmd_kolmogorov(args) -> int:
    wtd = parse_wtd_spec(args.wtd)
    pi, sigma = (0.5, 0.5) if args.preset == "half" else (0.0, 1.0)
    spec = SemiMarkovSpec(pi, sigma, wtd)
    scale = wtd.rate_scale
    lam_t = np.linspace(0.0, args.tmax, args.points)
    pairs = []
    for k in range(1, args.pairs + 1):
        d = k / args.pairs
        pairs.append(
            (
                ProbabilityVector((0.5 + d / 2, 0.5 - d / 2)),
                ProbabilityVector((0.5 - d / 2, 0.5 + d / 2)),
            )
        )
    report = witness_contractivity(spec, pairs, lam_t / scale)
    cfg = RunConfig(
        "kolmogorov",
        {
            "preset": args.preset,
            "wtd": args.wtd,
            "tmax": args.tmax,
            "points": args.points,
            "pairs": args.pairs,
            "seed": args.seed,
        },
    )
    if args.format == "json":
        payload = {
            "data": [
                {
                    "pair_id": k,
                    "t": [_fmt(x) for x in lam_t],
                    "DK": [_fmt(x) for x in report.distances[k]],
                    "growth_intervals": [
                        [_fmt(a * scale), _fmt(b * scale)]
                        for a, b in report.growth_intervals[k]
                    ],
                }
                for k in range(len(pairs))
            ]
        }
        _emit_json(args.out, cfg, payload)
    else:
        rows = []
        for k in range(len(pairs)):
            for x, dk in zip(lam_t, report.distances[k]):
                rows.append([_fmt(x), k, _fmt(dk)])
        _emit_csv(args.out, cfg, ["t", "pair_id", "DK"], rows)
    return EXIT_OK


def cmd_qm(args) -> int:
    if args.m_min < 1 or args.m_max < args.m_min:
        raise SpecParseError("need 1 <= m-min <= m-max")
    ms = list(range(args.m_min, args.m_max + 1))
    lam_t = np.linspace(0.0, args.tmax, args.points)
    columns = {}
    maxima_rows = []
    for m in ms:
        w = HypoExpWTD.erlang(m, args.rate)
        q = even_odd_difference(w)
        columns[m] = np.abs(q(lam_t / args.rate))
        partial = 0.0
        for p in find_extrema(q, (0.0, args.tmax / args.rate)):
            if p.kind == "max":
                partial += p.magnitude
                maxima_rows.append(
                    [m, _fmt(p.t * args.rate), _fmt(p.magnitude), _fmt(partial)]
                )
    cfg = RunConfig(
        "qm",
        {
            "m_min": args.m_min,
            "m_max": args.m_max,
            "rate": args.rate,
            "tmax": args.tmax,
            "points": args.points,
            "seed": args.seed,
        },
    )
    header = ["t"] + [f"abs_q{m}" for m in ms]
    max_header = ["m", "t_max", "height", "partial_sum"]
    if args.format == "json":
        payload = {
            "data": {
                "t": [_fmt(x) for x in lam_t],
                **{f"abs_q{m}": [_fmt(v) for v in columns[m]] for m in ms},
            },
            "maxima": [
                {"m": r[0], "t_max": r[1], "height": r[2], "partial_sum": r[3]}
                for r in maxima_rows
            ],
        }
        _emit_json(args.out, cfg, payload)
        return EXIT_OK
    rows = [
        [_fmt(x)] + [_fmt(columns[m][i]) for m in ms] for i, x in enumerate(lam_t)
    ]
    if args.out and args.out != "-":
        _emit_csv(args.out, cfg, header, rows)
        stem, ext = os.path.splitext(args.out)
        _emit_csv(stem + ".maxima" + (ext or ".csv"), cfg, max_header, maxima_rows)
    else:
        _emit_csv(None, cfg, header, rows)
        sys.stdout.write("\n")
        _emit_csv(None, cfg, max_header, maxima_rows)
    return EXIT_OK


def cmd_sign_scan(args) -> int:
    xs = np.linspace(args.x_min, args.x_max, args.x_points)
    lam_t = np.linspace(0.0, args.tmax, args.t_points)
    rows = []
    if args.mode == "qr":
        for r in xs:
            w = HypoExpWTD([args.rate, r * args.rate])
            q = even_odd_difference(w)
            vals = q(lam_t / args.rate)
            for x, v in zip(lam_t, vals):
                rows.append([_fmt(r), _fmt(x), 1 if v >= 0 else -1])
    else:
        wtd = parse_wtd_spec(args.wtd)
        scale = wtd.rate_scale
        for nu in xs:
            g = generating_function(wtd, 1.0 - 2.0 * float(nu))
            vals = g.value(lam_t / scale)
            for x, v in zip(lam_t, vals):
                rows.append([_fmt(nu), _fmt(x), 1 if v >= 0 else -1])
    cfg = RunConfig(
        "signscan",
        {
            "mode": args.mode,
            "x_min": args.x_min,
            "x_max": args.x_max,
            "x_points": args.x_points,
            "tmax": args.tmax,
            "t_points": args.t_points,
            "rate": args.rate,
            "wtd": args.wtd if args.mode == "nu" else None,
            "seed": args.seed,
        },
    )
    if args.format == "json":
        _emit_json(
            args.out,
            cfg,
            {"data": [{"x": r[0], "lambda_t": r[1], "sign": r[2]} for r in rows]},
        )
    else:
        _emit_csv(args.out, cfg, ["x", "lambda_t", "sign"], rows)
    return EXIT_OK


_TCL_PROBES = (
    QubitState.from_bloch([0.0, 0.0, 1.0]),
    QubitState.from_bloch([1.0, 0.0, 0.0]),
    QubitState.from_bloch([0.4, -0.5, 0.6]),
)


def cmd_tcl(args) -> int:
    ch = parse_channel_spec(args.channel)
    wtd = parse_wtd_spec(args.wtd)
    scale = wtd.rate_scale
    lam_t = np.linspace(args.tmin, args.tmax, args.points)
    rows = []
    for x in lam_t:
        co = tcl_coefficients(ch, wtd, float(x) / scale)
        if co.singular:
            rows.append([_fmt(x)] + [""] * 8 + [1])
            continue
        residual = max(tcl_equivalence_check(co, s) for s in _TCL_PROBES)
        rows.append(
            [_fmt(x)]
            + [_fmt(v / scale) for v in co.canonical]
            + [_fmt(v / scale) for v in co.overcomplete]
            + [_fmt(residual), 0]
        )
    cfg = RunConfig(
        "tcl",
        {
            "channel": args.channel,
            "wtd": args.wtd,
            "tmin": args.tmin,
            "tmax": args.tmax,
            "points": args.points,
            "seed": args.seed,
        },
    )
    header = [
        "t",
        "canon_x",
        "canon_y",
        "canon_z",
        "over_dephasing",
        "over_flip",
        "over_x",
        "over_y",
        "residual",
        "singular",
    ]
    if args.format == "json":
        _emit_json(
            args.out,
            cfg,
            {"data": [dict(zip(header, r)) for r in rows]},
        )
    else:
        _emit_csv(args.out, cfg, header, rows)
    return EXIT_OK


def cmd_choi_scan(args) -> int:
    ch = parse_channel_spec(args.channel)
    wtd = parse_wtd_spec(args.wtd)
    scale = wtd.rate_scale
    t_vals = np.linspace(0.0, args.tmax, args.t_points)
    s_vals = np.linspace(0.0, args.smax, args.s_points)
    scan = divisibility_scan(ch, wtd, t_vals / scale, s_vals / scale)
    rows = []
    for i, t in enumerate(t_vals):
        for j, s in enumerate(s_vals):
            if scan.singular_t[i]:
                rows.append([_fmt(t), _fmt(s), "", 0, 1])
            else:
                v = scan.min_component[i, j]
                rows.append([_fmt(t), _fmt(s), _fmt(v), -1 if v < -1e-12 else 1, 0])
    cfg = RunConfig(
        "choiscan",
        {
            "channel": args.channel,
            "wtd": args.wtd,
            "tmax": args.tmax,
            "smax": args.smax,
            "t_points": args.t_points,
            "s_points": args.s_points,
            "seed": args.seed,
        },
    )
    header = ["t", "s", "min_component", "sign", "singular"]
    if args.format == "json":
        _emit_json(args.out, cfg, {"data": [dict(zip(header, r)) for r in rows]})
    else:
        _emit_csv(args.out, cfg, header, rows)
    return EXIT_OK


def _is_pure_dephasing(ch: PauliChannel) -> float | None:
    """The generating-function argument when the map only damps coherences."""
    mu = ch.mu
    if abs(mu[3] - 1.0) < 1e-12 and abs(mu[1] - mu[2]) < 1e-12:
        return mu[1]
    return None


def cmd_measures(args) -> int:
    ch = parse_channel_spec(args.channel)
    wtd = parse_wtd_spec(args.wtd)
    scale = wtd.rate_scale
    window = None if args.window is None else (0.0, args.window / scale)
    numeric = blp_measure_numeric(
        ch, wtd, PairSearchConfig(n_directions=args.directions, window=window)
    )
    s_offset = args.s_offset / scale if args.s_offset else None
    hou = hou_measure(ch, wtd, s_offset=s_offset, window=window)
    rhp = rhp_divisibility_measure(ch, wtd, s_offset=s_offset, window=window)
    mu_deph = _is_pure_dephasing(ch)
    payload = {
        "blp_numeric": {
            "value": numeric.value,
            "direction": list(numeric.direction) if numeric.direction else None,
            "contributions": [
                {"interval": [a * scale, b * scale], "weight": c}
                for (a, b), c in numeric.contributions
            ],
            "note": numeric.note,
        },
        "hou": {
            "value": hou.value,
            "note": hou.note,
        },
        "rhp": {
            "value": None if rhp.is_infinite else rhp.value,
            "infinite": rhp.is_infinite,
            "note": rhp.note,
        },
    }
    if mu_deph is not None:
        analytic = blp_measure_dephasing(wtd, mu_deph)
        payload["blp_analytic"] = {
            "value": analytic.value,
            "tail_bound": analytic.tail_bound,
        }
    cfg = RunConfig(
        "measures",
        {
            "channel": args.channel,
            "wtd": args.wtd,
            "window": args.window,
            "s_offset": args.s_offset,
            "directions": args.directions,
            "seed": args.seed,
        },
    )
    _emit_json(args.out, cfg, {"measures": payload})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smqdyn",
        description="Semi-Markov classical/qubit dynamics and non-Markovianity data",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        p.add_argument("--seed", type=int, default=0, help="echoed into the config")

    p = sub.add_parser("kolmogorov", help="Kolmogorov-distance trajectories")
    p.add_argument("--preset", choices=["half", "flip"], required=True)
    p.add_argument("--wtd", required=True)
    p.add_argument("--tmax", type=float, default=20.0)
    p.add_argument("--points", type=int, default=400)
    p.add_argument("--pairs", type=int, default=10)
    common(p)
    p.set_defaults(func=cmd_kolmogorov)

    p = sub.add_parser("qm", help="|q_m| table for Erlang orders plus maxima")
    p.add_argument("--m-min", type=int, default=1)
    p.add_argument("--m-max", type=int, default=6)
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--tmax", type=float, default=30.0)
    p.add_argument("--points", type=int, default=600)
    common(p)
    p.set_defaults(func=cmd_qm)

    p = sub.add_parser("signscan", help="sign maps over (r, t) or (nu, t)")
    p.add_argument("--mode", choices=["qr", "nu"], required=True)
    p.add_argument("--x-min", type=float, required=True)
    p.add_argument("--x-max", type=float, required=True)
    p.add_argument("--x-points", type=int, default=60)
    p.add_argument("--tmax", type=float, default=30.0)
    p.add_argument("--t-points", type=int, default=120)
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--wtd", default="erlang:2:1", help="used in nu mode")
    common(p)
    p.set_defaults(func=cmd_sign_scan)

    p = sub.add_parser("tcl", help="time-local rates in both forms")
    p.add_argument("--channel", required=True)
    p.add_argument("--wtd", required=True)
    p.add_argument("--tmin", type=float, default=0.02)
    p.add_argument("--tmax", type=float, default=12.0)
    p.add_argument("--points", type=int, default=300)
    common(p)
    p.set_defaults(func=cmd_tcl)

    p = sub.add_parser("choiscan", help="sign map of the intermediate-map weight")
    p.add_argument("--channel", required=True)
    p.add_argument("--wtd", required=True)
    p.add_argument("--tmax", type=float, default=6.0)
    p.add_argument("--smax", type=float, default=3.0)
    p.add_argument("--t-points", type=int, default=100)
    p.add_argument("--s-points", type=int, default=100)
    common(p)
    p.set_defaults(func=cmd_choi_scan)

    p = sub.add_parser("measures", help="summary of all measures (JSON)")
    p.add_argument("--channel", required=True)
    p.add_argument("--wtd", required=True)
    p.add_argument("--window", type=float, default=None, help="scan horizon in rate*t")
    p.add_argument("--s-offset", type=float, default=None)
    p.add_argument("--directions", type=int, default=32)
    common(p)
    p.set_defaults(func=cmd_measures)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_SPEC_ERROR
    try:
        return args.func(args)
    except SpecParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC_ERROR
    except (
        UnstableSolverError,
        SeriesTruncationError,
        RootConvergenceError,
        FloatingPointError,
        RuntimeError,
    ) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
