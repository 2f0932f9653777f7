"""Reproducible scenario runs: observe, solve, synthesize, simulate, verify."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .diophantine import RealSpec, is_in_S
from .hum import (
    MaxIterExceeded,
    NotObservableAtTruncation,
    dense_hum_coords,
    simulate_controlled,
    solve_hum,
    verify_cost_bound,
)
from .observability import (
    INTERVAL_POINT,
    SQUARE_LEFT_EDGE,
    ObservationGeometry,
    assemble_gram,
    channel_layout,
    max_quotient,
    min_quotient,
    observed_energy,
    observed_trace,
    quotient_scan,
    write_quotient_csv,
)
from .spectral import ENERGY, WEAK, DomainSpec, ModalState, SobolevIndex, dual_pairing, state_norm

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_SOLVER = 3

ROUND_TRIP_TOL = 1e-6
CG_DENSE_TOL = 1e-6

PRESETS = ("square-T9", "square-T12", "interval-sqrt2", "interval-golden", "interval-xi-half")

_pair = {"oneOf": [{"enum": ["energy", "weak"]}, {"type": "number"}]}
_int_list = {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1, "maxItems": 2}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "domain", "truncation", "geometry", "horizon", "target"],
    "properties": {
        "name": {"type": "string"},
        "domain": {"enum": ["square", "interval"]},
        "truncation": _int_list,
        "geometry": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": [SQUARE_LEFT_EDGE, INTERVAL_POINT]},
                "xi": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "xi_exact": {"type": "object"},
            },
        },
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "pair": _pair,
        "cost_pair": _pair,
        "target": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["random"],
                    "properties": {
                        "random": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["seed"],
                            "properties": {"seed": {"type": "integer", "minimum": 0}},
                        }
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["mode"],
                    "properties": {"mode": _int_list, "pos": {"type": "number"}, "vel": {"type": "number"}},
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["pos", "vel"],
                    "properties": {
                        "pos": {"type": "array", "items": {"type": "number"}},
                        "vel": {"type": "array", "items": {"type": "number"}},
                    },
                },
            ]
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
            },
        },
        "scan": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "horizons": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "truncations": {"type": "array", "items": _int_list},
            },
        },
        "control_dt": {"type": "number", "exclusiveMinimum": 0},
        "output_dir": {"type": "string"},
    },
}


class ConfigError(ValueError):
    pass


def parse_pair(p) -> SobolevIndex:
    if isinstance(p, str):
        try:
            return {"energy": ENERGY, "weak": WEAK}[p.lower()]
        except KeyError:
            return SobolevIndex(float(p))
    return SobolevIndex(float(p))


def load_preset(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    text = resources.files("wavehum.presets").joinpath(f"{name}.json").read_text()
    return json.loads(text)


def validate_config(config: dict) -> dict:
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid scenario config: {exc.message}") from exc
    geo = config["geometry"]
    if (config["domain"] == "square") != (geo["kind"] == SQUARE_LEFT_EDGE):
        raise ConfigError("square domain goes with square_left_edge, interval with interval_point")
    if geo["kind"] == INTERVAL_POINT and "xi" not in geo and "xi_exact" not in geo:
        raise ConfigError("interval_point needs xi or xi_exact")
    expected = 2 if config["domain"] == "square" else 1
    if len(config["truncation"]) != expected:
        raise ConfigError(f"{config['domain']} truncation needs {expected} cutoffs")
    return config


@dataclass
class Scenario:
    name: str
    domain: DomainSpec
    geometry: ObservationGeometry
    pair: SobolevIndex
    cost_pair: SobolevIndex
    target: ModalState
    xi_exact: RealSpec | None
    tol: float
    max_iter: int | None
    config: dict


def build_scenario(config: dict) -> Scenario:
    config = validate_config(config)
    kind = config["domain"]
    domain = DomainSpec(kind, tuple(config["truncation"]))
    geo = config["geometry"]
    xi_exact = None
    try:
        if geo["kind"] == SQUARE_LEFT_EDGE:
            geometry = ObservationGeometry.square_left_edge(config["horizon"])
        else:
            if "xi_exact" in geo:
                xi_exact = RealSpec.from_dict(geo["xi_exact"])
                xi = float(xi_exact)
            else:
                xi = geo["xi"]
            geometry = ObservationGeometry.interval_point(xi, config["horizon"])
        target = _build_target(config["target"], domain)
    except (ValueError, IndexError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    default_pair = "weak" if kind == "square" else -0.5
    default_cost = "energy" if kind == "square" else 1.0
    solver = config.get("solver", {})
    return Scenario(
        config["name"],
        domain,
        geometry,
        parse_pair(config.get("pair", default_pair)),
        parse_pair(config.get("cost_pair", default_cost)),
        target,
        xi_exact,
        solver.get("tol", 1e-10),
        solver.get("max_iter"),
        config,
    )


def _build_target(spec: dict, domain: DomainSpec) -> ModalState:
    if "random" in spec:
        return ModalState.random(domain, np.random.default_rng(spec["random"]["seed"]))
    if "mode" in spec:
        return ModalState.single_mode(domain, spec["mode"], spec.get("pos", 0.0), spec.get("vel", 0.0))
    return ModalState(domain, spec["pos"], spec["vel"])


@dataclass
class ScenarioResult:
    exit_code: int
    results: dict
    output_dir: Path | None


def _check(name: str, criterion: int, value: float, threshold: float, passed: bool) -> dict:
    return {"name": name, "criterion": criterion, "value": value, "threshold": threshold, "passed": bool(passed)}


def run_scenario(config: dict, output_dir: str | os.PathLike | None = None, write: bool = True) -> ScenarioResult:
    """Execute one scenario and write ``results.json``, ``control.csv`` and ``trace.csv``.

    Raises :class:`ConfigError` for invalid configs; mathematical infeasibility and
    solver failures are reported in the bundle and through ``exit_code``.
    """
    sc = build_scenario(config)
    out = output_dir if output_dir is not None else config.get("output_dir", f"runs/{sc.name}")
    out = Path(out) if write else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    gram = assemble_gram(sc.geometry, sc.domain)
    qmin, _ = min_quotient(gram, sc.pair)
    results: dict = {
        "name": sc.name,
        "domain": sc.domain.to_dict(),
        "geometry": sc.geometry.to_dict(),
        "pair_alpha": sc.pair.alpha,
        "cost_pair_alpha": sc.cost_pair.alpha,
        "observability": {"min_quotient": qmin, "max_quotient": max_quotient(gram, sc.pair)},
    }
    if sc.xi_exact is not None:
        results["xi_verdict"] = is_in_S(sc.xi_exact).to_dict()
    scan_cfg = sc.config.get("scan")
    if scan_cfg:
        rows = quotient_scan(sc.geometry, scan_cfg.get("truncations", []), scan_cfg.get("horizons", []), sc.pair)
        results["scan"] = rows
        if out is not None:
            write_quotient_csv(rows, out / "scan.csv")

    checks = []
    square = sc.geometry.kind == SQUARE_LEFT_EDGE
    obs_criterion = 1 if square else 5
    checks.append(_check("weak_observability_positive", obs_criterion, qmin, 0.0, qmin > 0))

    try:
        sol = solve_hum(sc.target, gram, tol=sc.tol, max_iter=sc.max_iter, pair=sc.pair)
    except NotObservableAtTruncation as exc:
        results.update(
            status="not_observable",
            exit_code=EXIT_INFEASIBLE,
            message=str(exc),
            null_direction=exc.null_state.to_dict(),
            checks=checks,
        )
        return _finish(results, out, EXIT_INFEASIBLE)
    except MaxIterExceeded as exc:
        results.update(status="solver_failure", exit_code=EXIT_SOLVER, message=str(exc), residual=exc.residual,
                       checks=checks)
        return _finish(results, out, EXIT_SOLVER)

    final = simulate_controlled(sc.target, sol.control, sc.geometry.horizon)
    tnorm = state_norm(sc.target, sc.pair)
    round_trip = state_norm(final, sc.pair) / tnorm if tnorm > 0 else 0.0
    energy = observed_energy(sol.minimizer, gram)
    first_order = abs(dual_pairing(sol.minimizer, sc.target) + energy) / energy if energy > 0 else 0.0
    cost = verify_cost_bound(sol, sc.target, gram, sc.cost_pair)
    results["hum"] = {
        "residual": sol.residual,
        "iterations": sol.iterations,
        "first_order_gap": first_order,
        "observed_energy": energy,
        "minimizer": sol.minimizer.to_dict(),
    }
    results["cost"] = cost.to_dict()
    results["final_state"] = {"residual": round_trip, "pos": final.pos.tolist(), "vel": final.vel.tolist()}
    checks.append(_check("hum_round_trip", 3 if square else 5, round_trip, ROUND_TRIP_TOL, round_trip <= ROUND_TRIP_TOL))
    if square:
        ref = dense_hum_coords(sc.target, gram, sc.pair)
        gap = float(np.linalg.norm(sol.alpha - ref) / max(np.linalg.norm(ref), 1e-300))
        results["hum"]["cg_vs_dense"] = gap
        checks.append(_check("cg_matches_dense", 3, gap, CG_DENSE_TOL, gap <= CG_DENSE_TOL))

    passed = all(c["passed"] for c in checks)
    code = EXIT_OK if passed else EXIT_SOLVER
    results.update(status="pass" if passed else "fail", exit_code=code, checks=checks)
    if out is not None:
        dt = sc.config.get("control_dt", 0.01)
        sol.control.to_csv(out / "control.csv", dt)
        (out / "control.json").write_text(sol.control.to_json(indent=1))
        _write_trace(out / "trace.csv", sol.minimizer, sc.geometry, dt)
    return _finish(results, out, code)


def _finish(results: dict, out: Path | None, code: int) -> ScenarioResult:
    if out is not None:
        (out / "results.json").write_text(json.dumps(results, indent=1, sort_keys=True))
    return ScenarioResult(code, results, out)


def _write_trace(path, minimizer: ModalState, geometry: ObservationGeometry, dt: float):
    n = int(np.floor(geometry.horizon / dt + 1e-9))
    t = np.arange(n + 1) * dt
    y = observed_trace(minimizer, geometry, t)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        labels = [lab for lab, _, _ in channel_layout(geometry, minimizer.domain)]
        w.writerow(["t"] + [f"channel_{lab}" for lab in labels])
        for i in range(t.size):
            w.writerow([repr(float(t[i]))] + [repr(float(v)) for v in y[:, i]])


def scan_observability(
    geometry: ObservationGeometry,
    horizons,
    truncations,
    pair: SobolevIndex = WEAK,
    path=None,
    short=(1, 2, 4),
    long=(9, 12),
) -> dict:
    """Grid of truncated observability constants plus a short-vs-long horizon summary."""
    rows = quotient_scan(geometry, truncations, horizons, pair)
    if path is not None:
        write_quotient_csv(rows, path)
    summary = {}
    for r in rows:
        s = summary.setdefault(r["truncation"], {"short_max": None, "long_min": None})
        if r["T"] in short:
            s["short_max"] = r["min_quotient"] if s["short_max"] is None else max(s["short_max"], r["min_quotient"])
        if r["T"] in long:
            s["long_min"] = r["min_quotient"] if s["long_min"] is None else min(s["long_min"], r["min_quotient"])
    return {"rows": rows, "threshold": summary}


def xi_from_string(text: str) -> RealSpec:
    """Parse ``p/q``, ``surd:a,b,d`` (meaning a + b sqrt d) or a decimal string."""
    text = text.strip()
    if text.startswith("surd:"):
        a, b, d = text[5:].split(",")
        return RealSpec.surd(Fraction(a), Fraction(b), int(d))
    if "/" in text:
        p, q = text.split("/")
        return RealSpec.rational(int(p), int(q))
    return RealSpec.decimal(text)
