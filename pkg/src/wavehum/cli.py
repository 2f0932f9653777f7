"""Command-line entry point: ``wavehum {observe,control,scan,cf,transfer}``.

Exit codes: 0 pass, 1 usage/config error, 2 mathematical infeasibility
detected, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .diophantine import PrecisionExhausted, continued_fraction, is_in_S, sine_gap_scan
from .hum import transfer_scan
from .observability import ObservationGeometry, assemble_gram, max_quotient, min_quotient
from .scenarios import (
    EXIT_CONFIG,
    EXIT_INFEASIBLE,
    EXIT_OK,
    PRESETS,
    ConfigError,
    build_scenario,
    load_preset,
    parse_pair,
    run_scenario,
    scan_observability,
    xi_from_string,
)
from .spectral import DomainSpec


def _load_config(args) -> dict:
    if args.preset and args.config:
        raise ConfigError("give either --preset or --config, not both")
    if args.preset:
        return load_preset(args.preset)
    if args.config:
        try:
            with open(args.config) as fh:
                return json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    raise ConfigError("a --preset or --config is required")


def _geometry(kind: str, horizon: float, xi: str | None) -> ObservationGeometry:
    if kind == "square":
        return ObservationGeometry.square_left_edge(horizon)
    if xi is None:
        raise ConfigError("--xi is required for the interval")
    return ObservationGeometry.interval_point(float(xi_from_string(xi)), horizon)


def _truncation(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.lower().split("x"))


def cmd_observe(args) -> int:
    if args.preset or args.config:
        sc = build_scenario(_load_config(args))
        domain, geometry, pair = sc.domain, sc.geometry, sc.pair
    else:
        if args.horizon is None or args.truncation is None:
            raise ConfigError("observe needs --preset/--config or --domain, --truncation and --horizon")
        if args.horizon <= 0:
            raise ConfigError("horizon must be positive")
        geometry = _geometry(args.domain, args.horizon, args.xi)
        trunc = _truncation(args.truncation)
        if args.domain == "square" and len(trunc) == 1:
            trunc = trunc * 2
        domain = DomainSpec(args.domain, trunc)
        pair = parse_pair(args.pair)
    gram = assemble_gram(geometry, domain)
    if args.gram_csv:
        gram.to_csv(args.gram_csv)
    qmin, _ = min_quotient(gram, pair)
    out = {
        "domain": domain.to_dict(),
        "geometry": geometry.to_dict(),
        "pair_alpha": pair.alpha,
        "min_quotient": qmin,
        "max_quotient": max_quotient(gram, pair),
    }
    print(json.dumps(out, indent=1))
    return EXIT_OK if qmin > 0 else EXIT_INFEASIBLE


def cmd_control(args) -> int:
    res = run_scenario(_load_config(args), output_dir=args.out)
    r = res.results
    summary = {k: r[k] for k in ("name", "status", "exit_code") if k in r}
    summary["checks"] = r.get("checks", [])
    if "message" in r:
        summary["message"] = r["message"]
    summary["output_dir"] = str(res.output_dir)
    print(json.dumps(summary, indent=1))
    return res.exit_code


def cmd_scan(args) -> int:
    geometry = _geometry(args.domain, 1.0, args.xi)
    truncs = [_truncation(t) for t in args.truncations]
    rep = scan_observability(geometry, args.horizons, truncs, parse_pair(args.pair), path=args.out or sys.stdout)
    if args.summary:
        print(json.dumps(rep["threshold"], indent=1), file=sys.stderr)
    return EXIT_OK


def cmd_cf(args) -> int:
    x = xi_from_string(args.x)
    if args.precision is not None and x.kind == "decimal":
        x = type(x).decimal(args.x, args.precision)
    out = {"x": x.to_dict(), "verdict": is_in_S(x, args.depth).to_dict()}
    try:
        out["expansion"] = continued_fraction(x, args.terms).to_dict()
    except PrecisionExhausted as exc:
        out["expansion"] = {"quotients": exc.quotients, "terminated": False, "periodic": None, "exhausted": True}
    if args.gap:
        out["sine_gap"] = sine_gap_scan(x, args.gap).to_dict()
    print(json.dumps(out, indent=1))
    return EXIT_OK


def cmd_transfer(args) -> int:
    geometry = _geometry("interval", 1.0, args.xi)
    scan = transfer_scan(geometry, DomainSpec.interval(args.N), args.delta, args.bound, args.points)
    print(json.dumps(scan.to_dict(), indent=1))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wavehum", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add_source(sp):
        sp.add_argument("--preset", choices=PRESETS)
        sp.add_argument("--config", help="scenario JSON file")

    o = sub.add_parser("observe", help="truncated observability/admissibility constants")
    add_source(o)
    o.add_argument("--domain", choices=["square", "interval"], default="square")
    o.add_argument("--truncation", help="N for the interval, K1xK2 (or K) for the square")
    o.add_argument("--horizon", type=float)
    o.add_argument("--xi", help="observation point: p/q, surd:a,b,d or decimal")
    o.add_argument("--pair", default="weak", help="energy, weak, or the Sobolev index a of (H_a, H_{a-1/2})")
    o.add_argument("--gram-csv", help="export the Gram entries (row,col,re,im)")
    o.set_defaults(func=cmd_observe)

    c = sub.add_parser("control", help="run a HUM scenario and write its artifact bundle")
    add_source(c)
    c.add_argument("--out", help="output directory (default: runs/<name>)")
    c.set_defaults(func=cmd_control)

    s = sub.add_parser("scan", help="min/max quotient grid as CSV")
    s.add_argument("--domain", choices=["square", "interval"], default="square")
    s.add_argument("--xi")
    s.add_argument("--horizons", type=float, nargs="*", default=[])
    s.add_argument("--truncations", nargs="*", default=[])
    s.add_argument("--pair", default="weak")
    s.add_argument("--out", help="CSV path (default: stdout)")
    s.add_argument("--summary", action="store_true", help="print the short/long horizon summary to stderr")
    s.set_defaults(func=cmd_scan)

    f = sub.add_parser("cf", help="continued fraction and bounded-quotient verdict")
    f.add_argument("x", help="p/q, surd:a,b,d (a + b sqrt d) or a decimal string")
    f.add_argument("--terms", type=int, default=30)
    f.add_argument("--depth", type=int, default=30)
    f.add_argument("--precision", type=int, help="certified decimal digits (default: all given)")
    f.add_argument("--gap", type=int, default=0, help="also scan n|sin(n pi x)| up to this n")
    f.set_defaults(func=cmd_cf)

    t = sub.add_parser("transfer", help="sup of |H(lambda)| on Re(lambda) = delta")
    t.add_argument("--xi", required=True)
    t.add_argument("--N", type=int, default=256)
    t.add_argument("--delta", type=float, default=1.0)
    t.add_argument("--bound", type=float, default=100.0)
    t.add_argument("--points", type=int, default=20001)
    t.set_defaults(func=cmd_transfer)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
