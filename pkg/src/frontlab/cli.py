"""Command-line entry point.

One TOML file describes one scenario; subcommands dispatch experiments and
write artifacts (report.json, track.csv, snapshots/) into the output
directory. Sweeps rerun a base scenario over one numeric axis, each cell
in its own process.

Exit codes: 0 all enabled checks passed, 1 a check failed, 2 usage or
configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import datetime
import json
import os
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import certify, interface, periodiclab
from .errors import FrontLabError, ScenarioError
from .profile import fit_tail, minimal_speed, solve_profile
from .reaction import (
    Nonlinearity,
    bistable,
    from_table_file,
    hump,
    kpp_power,
    logistic,
    time_switched,
)
from .solver import SolverConfig, evolve, evolve_periodic, init_from_profile
from .speedlaw import predict_c2, run_switch_experiment

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_FAMILIES = {
    "logistic": lambda params: logistic(*params),
    "kpp-power": lambda params: kpp_power(*params),
    "bistable": lambda params: bistable(*params),
    "capped-tent-hump": lambda params: hump(*params),
}


def _get(cfg: dict, dotted: str, kind=None, default=...):
    node = cfg
    parts = dotted.split(".")
    for p in parts:
        if not isinstance(node, dict) or p not in node:
            if default is not ...:
                return default
            raise ScenarioError(f"missing key {dotted}")
        node = node[p]
    if kind is not None and not isinstance(node, kind):
        names = kind if isinstance(kind, tuple) else (kind,)
        raise ScenarioError(
            f"key {dotted} must be {'/'.join(k.__name__ for k in names)}, "
            f"got {type(node).__name__}")
    return node


def _nonlinearity(cfg: dict, key: str) -> Nonlinearity:
    spec = _get(cfg, key, dict)
    family = _get(cfg, f"{key}.family", str)
    if family == "tabulated":
        return from_table_file(_get(cfg, f"{key}.file", str))
    if family not in _FAMILIES:
        raise ScenarioError(
            f"{key}.family = {family!r} is not one of "
            f"{sorted(_FAMILIES) + ['tabulated']}")
    params = spec.get("params", [])
    if not isinstance(params, list):
        raise ScenarioError(f"{key}.params must be a list")
    try:
        return _FAMILIES[family](params)
    except TypeError as exc:
        raise ScenarioError(f"{key}: bad params for {family}: {exc}") from exc


def _solver_config(cfg: dict) -> SolverConfig:
    s = _get(cfg, "solver", dict, default={})
    known = {"dx", "dt", "scheme", "window_left", "window_right",
             "window_policy", "follow_level", "boundary", "snapshot_stride"}
    unknown = set(s) - known
    if unknown:
        raise ScenarioError(f"unknown solver keys: {sorted(unknown)}")
    if "dx" not in s:
        raise ScenarioError("missing key solver.dx")
    try:
        return SolverConfig(**s)
    except FrontLabError as exc:
        raise ScenarioError(f"solver config: {exc}") from exc


def load_scenario(path) -> dict:
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{path}: {exc}")
    _get(cfg, "scenario.name", str)
    _get(cfg, "scenario.experiment", str)
    return cfg


def _write_report(out_dir: str, report: dict) -> str:
    os.makedirs(out_dir, exist_ok=True)
    report = dict(report)
    report["timestamp"] = datetime.datetime.now().isoformat()
    path = os.path.join(out_dir, "report.json")
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _export_trajectory(traj, out_dir: str, export_stride: int = 10):
    traj.track.export_csv(os.path.join(out_dir, "track.csv"))
    snap_dir = os.path.join(out_dir, "snapshots")
    os.makedirs(snap_dir, exist_ok=True)
    keep = traj.snapshots[::export_stride]
    if traj.snapshots and traj.snapshots[-1] is not keep[-1]:
        keep.append(traj.snapshots[-1])
    sub = type(traj)(snapshots=keep, track=traj.track)
    sub.export_snapshots_csv(snap_dir)
    traj.export_shift_log(os.path.join(out_dir, "window_shifts.jsonl"))


def run_profile(cfg: dict, out_dir: str) -> dict:
    nl = _nonlinearity(cfg, "reaction.f1")
    c = _get(cfg, "experiment.c", (int, float))
    tol = _get(cfg, "experiment.tol", (int, float), default=1e-3)
    prof = solve_profile(nl, float(c), tol=float(tol))
    os.makedirs(out_dir, exist_ok=True)
    prof.export_text(os.path.join(out_dir, "profile.txt"))
    tail = fit_tail(prof)
    return {"passed": True,
            "result": {"c": prof.c, "nodes": int(prof.grid.size),
                       "tail_lambda": tail.lam, "tail_amplitude": tail.amplitude,
                       "tail_r2": tail.r2, "degenerate_tail": tail.degenerate}}


def run_minspeed(cfg: dict, out_dir: str) -> dict:
    nl = _nonlinearity(cfg, "reaction.f1")
    tol = _get(cfg, "experiment.tol", (int, float), default=1e-3)
    cstar = minimal_speed(nl, tol=float(tol))
    return {"passed": True, "result": {"cstar": cstar, "tol": tol}}


def run_switch(cfg: dict, out_dir: str) -> dict:
    f1 = _nonlinearity(cfg, "reaction.f1")
    f2 = _nonlinearity(cfg, "reaction.f2")
    t1 = float(_get(cfg, "reaction.t1", (int, float)))
    t2 = float(_get(cfg, "reaction.t2", (int, float)))
    blend = _get(cfg, "reaction.blend", str, default="smoothstep")
    c1 = float(_get(cfg, "experiment.c1", (int, float)))
    horizon = float(_get(cfg, "experiment.horizon", (int, float), default=200.0))
    burn_in = float(_get(cfg, "experiment.burn_in", (int, float), default=50.0))
    rel_tol = float(_get(cfg, "experiment.rel_tol", (int, float), default=0.05))
    scfg = _solver_config(cfg)
    rep = run_switch_experiment(f1, f2, c1, gap_blend=blend, cfg=scfg,
                                t1=t1, t2=t2, horizon=horizon,
                                burn_in=burn_in, rel_tol=rel_tol)
    os.makedirs(out_dir, exist_ok=True)
    stride = int(_get(cfg, "output.snapshot_export_stride", int, default=10))
    _export_trajectory(rep.trajectory, out_dir, stride)
    return {"passed": rep.passed, "result": rep.to_dict()}


def run_periodic(cfg: dict, out_dir: str) -> dict:
    L = float(_get(cfg, "experiment.period", (int, float), default=2.0))
    rate_amp = float(_get(cfg, "experiment.rate_amplitude", (int, float),
                          default=0.5))
    diff_amp = float(_get(cfg, "experiment.diffusivity_amplitude", (int, float),
                          default=0.0))
    c_init = float(_get(cfg, "experiment.c_init", (int, float), default=2.5))
    t_end = float(_get(cfg, "experiment.t_end", (int, float), default=160.0))
    burn_in = float(_get(cfg, "experiment.burn_in", (int, float), default=100.0))
    shift = float(_get(cfg, "experiment.twin_shift", (int, float), default=0.7))
    res_tol = float(_get(cfg, "experiment.residual_tol", (int, float),
                         default=1e-2))
    scfg = _solver_config(cfg)
    if abs(L / scfg.dx - round(L / scfg.dx)) > 1e-9:
        raise ScenarioError(f"solver.dx = {scfg.dx} must divide the period {L}")

    f = lambda x, u: (1.0 + rate_amp * np.sin(2.0 * np.pi * x / L)) * u * (1.0 - u)
    a = None
    if diff_amp:
        a = lambda x: 1.0 + diff_amp * np.sin(2.0 * np.pi * x / L)
    prof = solve_profile(logistic(1.0), c_init)
    w = (-scfg.window_left, scfg.window_right or 160.0)

    def one(sh):
        st = init_from_profile(prof, sh, w, dx=scfg.dx)
        traj = evolve_periodic(st, a, f, L, t_end, scfg)
        est = periodiclab.pulsating_mean_speed(traj.track, L, burn_in=burn_in)
        rep = periodiclab.pulsating_identity_check(traj, L, c_hat=est.c_hat,
                                                   burn_in=burn_in)
        return est, rep, traj

    est_a, rep_a, traj = one(0.0)
    est_b, rep_b, _ = one(shift)
    speed_gap = abs(est_a.c_hat - est_b.c_hat)
    speed_ok = speed_gap <= max(4.0 * (est_a.ci_halfwidth + est_b.ci_halfwidth),
                                1e-3 * abs(est_a.c_hat))
    passed = bool(rep_a.residual <= res_tol and rep_b.residual <= res_tol
                  and speed_ok)
    os.makedirs(out_dir, exist_ok=True)
    stride = int(_get(cfg, "output.snapshot_export_stride", int, default=10))
    _export_trajectory(traj, out_dir, stride)
    return {"passed": passed,
            "result": {"identity": rep_a.to_dict(),
                       "identity_shifted": rep_b.to_dict(),
                       "speed": est_a.to_dict(),
                       "speed_shifted": est_b.to_dict(),
                       "shift_speed_gap": speed_gap,
                       "residual_tol": res_tol}}


def _certificate_records(traj, r, eps, dx) -> list[dict]:
    thr = 10.0 * dx * dx
    cert = certify.supersolution_envelope(traj, r, eps)
    cert = certify.heat_lower_bound(traj, eps, cert=cert, r=r)
    ordering = certify.ordering_check(traj)
    mono = certify.time_monotonicity_check(traj, r=r)
    recs = [
        {"check": "supersolution-envelope",
         "residual": cert.violation_sup, "threshold": thr,
         "passed": bool(cert.violation_sup <= thr)},
        {"check": "heat-lower-bound",
         "residual": cert.heat_bound_violation, "threshold": thr,
         "passed": bool(cert.heat_bound_violation <= thr
                        and cert.heat_closed_form_ok)},
        {"check": "interior-ordering",
         "residual": max(0.0 - ordering.min_u, ordering.max_u - 1.0, 0.0),
         "threshold": 0.0,
         "passed": bool(ordering.min_u > 0.0 and ordering.max_u < 1.0)},
        {"check": "time-monotonicity",
         "residual": mono.max_negative_increment, "threshold": mono.tol,
         "passed": mono.status in ("pass", "skipped"),
         "status": mono.status},
    ]
    return recs


def _shift_record(f1, c1, offset, scfg) -> dict:
    """Twin runs offset in space: recovered shift vs offset/speed."""
    prof = solve_profile(f1, c1)
    cfg = SolverConfig(dx=scfg.dx, dt=0.02, scheme="imex_cn",
                       window_left=60.0, window_right=120.0,
                       snapshot_stride=5)
    from .reaction import time_independent
    r = time_independent(f1)
    a = init_from_profile(prof, 0.0, (-60.0, 120.0), dx=cfg.dx)
    traj_a = evolve(a, r, 30.0, cfg)
    b = init_from_profile(prof, -offset, (-60.0, 120.0), dx=cfg.dx)
    traj_b = evolve(b, r, 30.0 + 2.0 * offset / c1, cfg)
    rep = certify.shift_comparison(traj_a, traj_b,
                                   search_range=(0.0, 2.0 * offset / c1),
                                   tol=cfg.dx ** 2, grid_step=0.02)
    target = offset / c1
    return {"check": "comparison-up-to-shift",
            "residual": abs(rep.T - target) / target,
            "threshold": 0.01,
            "passed": bool(abs(rep.T - target) <= 0.01 * target
                           and rep.sup_distance <= 10.0 * cfg.dx ** 2),
            "T": rep.T, "target": target,
            "sup_distance": rep.sup_distance}


def run_certify(cfg: dict, out_dir: str) -> dict:
    f1 = _nonlinearity(cfg, "reaction.f1")
    f2 = _nonlinearity(cfg, "reaction.f2")
    t1 = float(_get(cfg, "reaction.t1", (int, float)))
    t2 = float(_get(cfg, "reaction.t2", (int, float)))
    blend = _get(cfg, "reaction.blend", str, default="smoothstep")
    c1 = float(_get(cfg, "experiment.c1", (int, float)))
    eps = float(_get(cfg, "experiment.eps", (int, float), default=0.1))
    scfg = _solver_config(cfg)
    pred = predict_c2(f1, f2, c1)
    prof = solve_profile(f1, max(c1, pred.cstar1))
    w = (-scfg.window_left,
         scfg.window_right if scfg.window_right is not None else 200.0)
    state = init_from_profile(prof, 0.0, w, dx=scfg.dx, t0=t1)
    r = time_switched(f1, f2, t1, t2, blend=blend)
    traj = evolve(state, r, t2, scfg)
    traj.meta["lambda1c"] = pred.lambda_1c1
    recs = _certificate_records(traj, r, eps, scfg.dx)
    offset = float(_get(cfg, "experiment.shift_offset", (int, float),
                        default=5.0))
    if offset > 0.0:
        recs.append(_shift_record(f1, max(c1, pred.cstar1), offset, scfg))
    return {"passed": bool(all(rec["passed"] for rec in recs)),
            "result": {"records": recs, "prediction": pred.to_dict()}}


def run_criteria(cfg: dict, out_dir: str) -> dict:
    f1 = _nonlinearity(cfg, "reaction.f1")
    f2 = _nonlinearity(cfg, "reaction.f2")
    t1 = float(_get(cfg, "reaction.t1", (int, float)))
    t2 = float(_get(cfg, "reaction.t2", (int, float)))
    c1 = float(_get(cfg, "experiment.c1", (int, float)))
    horizon = float(_get(cfg, "experiment.horizon", (int, float), default=100.0))
    levels = _get(cfg, "experiment.levels", list, default=[0.1, 0.5, 0.9])
    C = float(_get(cfg, "experiment.band_halfwidth", (int, float), default=10.0))
    max_dist = float(_get(cfg, "experiment.max_level_distance", (int, float),
                          default=40.0))
    scfg = _solver_config(cfg)
    pred = predict_c2(f1, f2, c1)
    prof = solve_profile(f1, max(c1, pred.cstar1))
    w = (-scfg.window_left,
         scfg.window_right if scfg.window_right is not None else 160.0)
    state = init_from_profile(prof, 0.0, w, dx=scfg.dx, t0=t1)
    r = time_switched(f1, f2, t1, t2)
    traj = evolve(state, r, t2 + horizon, scfg)
    rep = interface.verify_transition_criteria(traj, traj.track,
                                               [float(v) for v in levels],
                                               C, max_distance=max_dist)
    os.makedirs(out_dir, exist_ok=True)
    stride = int(_get(cfg, "output.snapshot_export_stride", int, default=10))
    _export_trajectory(traj, out_dir, stride)
    return {"passed": rep.passed, "result": rep.to_dict()}


_RUNNERS = {
    "profile": run_profile,
    "minspeed": run_minspeed,
    "switch": run_switch,
    "periodic": run_periodic,
    "certify": run_certify,
    "criteria": run_criteria,
}


def run_scenario(cfg: dict, out_dir: str | None, seed: int | None = None) -> tuple[int, dict]:
    experiment = _get(cfg, "scenario.experiment", str)
    if experiment not in _RUNNERS:
        raise ScenarioError(
            f"scenario.experiment = {experiment!r}; expected one of {sorted(_RUNNERS)}")
    if out_dir is None:
        out_dir = _get(cfg, "output.dir", str, default="out")
    report = {"name": _get(cfg, "scenario.name", str),
              "experiment": experiment, "seed": seed, "config": cfg}
    try:
        outcome = _RUNNERS[experiment](cfg, out_dir)
    except ScenarioError:
        raise
    except FrontLabError as exc:
        report.update({"passed": False,
                       "error": {"type": type(exc).__name__, "message": str(exc)}})
        _write_report(out_dir, report)
        return EXIT_NUMERICAL, report
    report.update(outcome)
    _write_report(out_dir, report)
    return (EXIT_OK if outcome["passed"] else EXIT_CHECK_FAILED), report


def _set_dotted(cfg: dict, dotted: str, value):
    parts = dotted.split(".")
    node = cfg
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value


def _sweep_cell(args):
    cfg, axis, value, out_dir, seed = args
    cfg = json.loads(json.dumps(cfg))  # deep copy without shared state
    _set_dotted(cfg, axis, value)
    try:
        code, report = run_scenario(cfg, out_dir, seed)
        return {"axis": axis, "value": value, "exit": code,
                "passed": report.get("passed", False),
                "result": report.get("result"),
                "error": report.get("error")}
    except ScenarioError as exc:
        return {"axis": axis, "value": value, "exit": EXIT_CONFIG,
                "passed": False, "error": {"type": "ScenarioError",
                                           "message": str(exc)}}


def run_sweep(cfg: dict, axis: str, values, out_dir: str, jobs: int,
              seed: int | None) -> tuple[int, dict]:
    _get(cfg, axis, (int, float))  # axis must name an existing numeric field
    cells = [(cfg, axis, v, os.path.join(out_dir, f"cell_{i:03d}"), seed)
             for i, v in enumerate(values)]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_cell, cells))
    else:
        results = [_sweep_cell(c) for c in cells]
    table = {"axis": axis, "cells": results,
             "passed": bool(all(r["passed"] for r in results))}
    _write_report(out_dir, {"name": _get(cfg, "scenario.name", str),
                            "experiment": "sweep", "seed": seed,
                            "config": cfg, "passed": table["passed"],
                            "result": table})
    return (EXIT_OK if table["passed"] else EXIT_CHECK_FAILED), table


def run_accept(criteria_filter, out_dir: str | None) -> int:
    from . import acceptance
    results = acceptance.run_all(criteria_filter)
    for res in results:
        print(res.format_line())
    if out_dir:
        _write_report(out_dir, {
            "name": "acceptance-suite", "experiment": "accept", "seed": None,
            "config": {}, "passed": all(r.passed for r in results),
            "result": {"criteria": [r.to_dict() for r in results]}})
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="frontlab",
        description="1D reaction-diffusion front propagation laboratory")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in sorted(_RUNNERS):
        p = sub.add_parser(name, help=f"run a {name} scenario")
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--seed", type=int, default=None)
    p = sub.add_parser("sweep", help="rerun a base scenario over one axis")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", required=True,
                   help="dotted key into the scenario, e.g. experiment.c1")
    p.add_argument("--values", required=True,
                   help="comma-separated numeric values")
    p.add_argument("--out", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p = sub.add_parser("accept", help="run the acceptance suite")
    p.add_argument("--criteria", default=None,
                   help="comma-separated criterion numbers (default: all)")
    p.add_argument("--out", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "accept":
            crit = ([int(v) for v in args.criteria.split(",")]
                    if args.criteria else None)
            return run_accept(crit, args.out)
        cfg = load_scenario(args.config)
        if args.command == "sweep":
            values = [float(v) for v in args.values.split(",")]
            out = args.out or _get(cfg, "output.dir", str, default="out")
            code, _ = run_sweep(cfg, args.axis, values, out, args.jobs,
                                args.seed)
            return code
        declared = _get(cfg, "scenario.experiment", str)
        if declared != args.command:
            raise ScenarioError(
                f"scenario declares experiment {declared!r} but was invoked "
                f"as {args.command!r}")
        code, _ = run_scenario(cfg, args.out, args.seed)
        return code
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
