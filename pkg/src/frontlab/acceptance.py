"""Acceptance suite: ten end-to-end criteria with pinned tolerances.

Each criterion is a function returning a CriterionResult; the heavyweight
switch run is computed once and shared. The suite is callable from the
CLI (`frontlab accept`) and from the pytest module that wraps it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import certify, interface, periodiclab
from .errors import NoComparisonError
from .interface import InterfaceTrack, global_mean_speed, verify_transition_criteria
from .profile import decay_exponent, fit_tail, minimal_speed, solve_profile
from .reaction import logistic, time_independent, time_switched
from .solver import SolverConfig, evolve, evolve_periodic, init_from_profile, trajectory_from_function
from .speedlaw import predict_c2, run_switch_experiment

DX = 0.05


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: dict
    seconds: float

    def format_line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        keyvals = ", ".join(f"{k}={v}" for k, v in self.details.items())
        return f"[{flag}] criterion {self.number}: {self.title} ({keyvals}) [{self.seconds:.1f}s]"

    def to_dict(self) -> dict:
        return {"number": self.number, "title": self.title,
                "passed": self.passed, "details": self.details,
                "seconds": self.seconds}


_cache: dict = {}


def _flagship_report():
    """Smoothstep flagship switch run, shared by criteria 3, 6 and 7."""
    if "flagship" not in _cache:
        _cache["flagship"] = run_switch_experiment(
            logistic(1.0), logistic(2.0), 2.5, gap_blend="smoothstep",
            keep_trajectory=True)
    return _cache["flagship"]


def _gap_certificates(dx: float):
    """Certificates over the switch gap at resolution dx (dt tied to dx)."""
    key = ("gapcert", dx)
    if key not in _cache:
        f1, f2 = logistic(1.0), logistic(2.0)
        prof = solve_profile(f1, 2.5)
        cfg = SolverConfig(dx=dx, dt=0.5 * dx, scheme="imex_cn",
                           window_policy="fixed", window_right=220.0,
                           snapshot_stride=max(1, int(round(0.5 / dx))))
        state = init_from_profile(prof, 0.0, (-80.0, 220.0), dx=dx)
        r = time_switched(f1, f2, 0.0, 10.0)
        traj = evolve(state, r, 10.0, cfg)
        traj.meta["lambda1c"] = 0.5
        cert = certify.supersolution_envelope(traj, r, eps=0.1)
        cert = certify.heat_lower_bound(traj, eps=0.1, cert=cert, r=r)
        _cache[key] = cert
    return _cache[key]


def criterion_1() -> CriterionResult:
    """Minimal speed of the logistic rate, and the evolved spreading speed."""
    t0 = time.time()
    cstar = minimal_speed(logistic(1.0), tol=1e-3)
    bisect_ok = abs(cstar - 2.0) <= 0.005 * 2.0

    prof = solve_profile(logistic(1.0), 2.0)
    cfg = SolverConfig(scheme="imex_cn", dt=0.1, window_right=150.0)
    state = init_from_profile(prof, 0.0, (-80.0, 150.0), dx=DX)
    traj = evolve(state, time_independent(logistic(1.0)), 200.0, cfg)
    est = global_mean_speed(traj.track, min_gap=60.0, log_correction=True)
    evolved_ok = abs(est.c_hat - 2.0) <= 0.03 * 2.0
    return CriterionResult(
        1, "KPP minimal speed (bisection and evolved front)",
        bool(bisect_ok and evolved_ok),
        {"cstar": round(cstar, 6), "evolved": round(est.c_hat, 4)},
        time.time() - t0)


def criterion_2() -> CriterionResult:
    """Fitted tail exponents against the closed-form decay law."""
    t0 = time.time()
    worst = 0.0
    values = {}
    for c in (2.25, 2.5, 3.0):
        target = decay_exponent(1.0, 2.0, c)
        prof = solve_profile(logistic(1.0), c)
        fit = fit_tail(prof)
        rel = abs(fit.lam - target) / target
        worst = max(worst, rel)
        values[f"c={c}"] = round(fit.lam, 5)
    return CriterionResult(
        2, "decay-exponent law reproduced by tail fits within 1%",
        bool(worst <= 0.01), {**values, "worst_rel": round(worst, 5)},
        time.time() - t0)


def criterion_3() -> CriterionResult:
    """Flagship switch: prediction 4.5, measurement, gap-profile independence."""
    t0 = time.time()
    rep = _flagship_report()
    pred_ok = rep.prediction.c2_predicted == 4.5
    meas_ok = rep.rel_error <= 0.05
    speeds = {"smoothstep": rep.c2_measured}
    for blend in ("linear", "hold-f1"):
        alt = run_switch_experiment(logistic(1.0), logistic(2.0), 2.5,
                                    gap_blend=blend, keep_trajectory=False)
        speeds[blend] = alt.c2_measured
    vals = list(speeds.values())
    mutual = (max(vals) - min(vals)) / min(vals)
    return CriterionResult(
        3, "flagship speed switch and gap-profile independence",
        bool(pred_ok and meas_ok and mutual <= 0.02),
        {"predicted": rep.prediction.c2_predicted,
         "measured": {k: round(v, 4) for k, v in speeds.items()},
         "blend_spread": round(mutual, 5)},
        time.time() - t0)


def criterion_4() -> CriterionResult:
    """Slow-down branch and prediction continuity across the branch point."""
    t0 = time.time()
    rep = run_switch_experiment(logistic(1.0), logistic(0.25), 2.0,
                                keep_trajectory=False)
    pred_ok = rep.prediction.c2_predicted == 1.0
    meas_ok = rep.rel_error <= 0.05

    # the branch boundary for (f1, f2) = (logistic 1, logistic 1/4) sits at
    # c1 = 2.5; the two formulas must meet there
    h = 1e-7
    below = predict_c2(logistic(1.0), logistic(0.25), 2.5 - h).c2_predicted
    above = predict_c2(logistic(1.0), logistic(0.25), 2.5 + h).c2_predicted
    jump = abs(above - below)
    return CriterionResult(
        4, "slow-down to the minimal speed and branch continuity",
        bool(pred_ok and meas_ok and jump < 1e-6),
        {"predicted": rep.prediction.c2_predicted,
         "measured": round(rep.c2_measured, 4),
         "branch_jump": f"{jump:.2e}"},
        time.time() - t0)


def criterion_5() -> CriterionResult:
    """Envelope sandwich over the switch gap, with refinement scaling."""
    t0 = time.time()
    cert = _gap_certificates(DX)
    cert_fine = _gap_certificates(DX / 2.0)
    thr = 10.0 * DX * DX
    thr_fine = thr / 4.0
    ok = (cert.violation_sup <= thr
          and cert.heat_bound_violation <= thr
          and cert_fine.violation_sup <= thr_fine
          and cert_fine.heat_bound_violation <= thr_fine
          and cert.heat_closed_form_ok and cert_fine.heat_closed_form_ok)
    return CriterionResult(
        5, "supersolution and heat lower bound hold within scheme error",
        bool(ok),
        {"upper_violation": f"{cert.violation_sup:.2e}",
         "lower_violation": f"{cert.heat_bound_violation:.2e}",
         "upper_violation_dx/2": f"{cert_fine.violation_sup:.2e}",
         "lower_violation_dx/2": f"{cert_fine.heat_bound_violation:.2e}",
         "threshold": thr},
        time.time() - t0)


def criterion_6() -> CriterionResult:
    """Localization criteria pass on the flagship; flattening profile fails."""
    t0 = time.time()
    traj = _flagship_report().trajectory
    rep = verify_transition_criteria(traj, traj.track, [0.1, 0.5, 0.9],
                                     C=10.0, max_distance=40.0)

    def flattening(t, x):
        return 1.0 / (1.0 + np.exp(x / (1.0 + t)))

    synth = trajectory_from_function(flattening, np.linspace(0.0, 100.0, 51),
                                     (-400.0, 400.0), dx=0.1)
    rep_flat = verify_transition_criteria(synth, synth.track, [0.1, 0.5, 0.9],
                                          C=10.0, max_distance=40.0)
    flat_fails = not all(r.passed for r in rep_flat.level_distances)
    return CriterionResult(
        6, "front-localization criteria separate fronts from flattening",
        bool(rep.passed and flat_fails),
        {"max_level_distance": round(max(r.max_distance
                                         for r in rep.level_distances), 3),
         "band": (round(rep.band_inf, 5), round(rep.band_sup, 5)),
         "flattening_max_distance": round(max(r.max_distance
                                              for r in rep_flat.level_distances), 1)},
        time.time() - t0)


def criterion_7() -> CriterionResult:
    """Time monotonicity of the flagship run (f nondecreasing in time)."""
    t0 = time.time()
    traj = _flagship_report().trajectory
    tol = 10.0 * DX * DX
    rep = certify.time_monotonicity_check(traj, tol=tol, burn_in=10.0)
    return CriterionResult(
        7, "solution increases in time after burn-in",
        bool(rep.status == "pass"),
        {"max_negative_increment": f"{rep.max_negative_increment:.2e}",
         "tol": tol},
        time.time() - t0)


def criterion_8() -> CriterionResult:
    """Twin runs offset in space are ordered after the predicted time shift."""
    t0 = time.time()
    c = 2.5
    offset = 5.0
    prof = solve_profile(logistic(1.0), c)
    cfg = SolverConfig(scheme="imex_cn", dt=0.02, window_right=120.0,
                       snapshot_stride=5)
    r = time_independent(logistic(1.0))
    state_a = init_from_profile(prof, 0.0, (-60.0, 120.0), dx=DX)
    traj_a = evolve(state_a, r, 30.0, cfg)
    state_b = init_from_profile(prof, -offset, (-60.0, 120.0), dx=DX)
    traj_b = evolve(state_b, r, 34.0, cfg)
    rep = certify.shift_comparison(traj_a, traj_b, search_range=(0.0, 4.0),
                                   tol=DX * DX, grid_step=0.02)
    T_target = offset / c
    t_ok = abs(rep.T - T_target) <= 0.01 * T_target
    d_ok = rep.sup_distance <= 10.0 * DX * DX
    return CriterionResult(
        8, "comparison up to a time shift recovers offset/speed",
        bool(t_ok and d_ok and rep.monotone_in_T),
        {"T": round(rep.T, 4), "target": T_target,
         "sup_distance": f"{rep.sup_distance:.2e}",
         "monotone_in_T": rep.monotone_in_T},
        time.time() - t0)


def criterion_9() -> CriterionResult:
    """Pulsating identity in a sinusoidal-rate periodic medium, L = 2."""
    t0 = time.time()
    L = 2.0
    prof = solve_profile(logistic(1.0), 2.5)
    cfg = SolverConfig(scheme="imex_cn", dt=0.05, window_right=160.0,
                       snapshot_stride=4)
    f = lambda x, u: (1.0 + 0.5 * np.sin(2.0 * np.pi * x / L)) * u * (1.0 - u)

    def one(shift):
        st = init_from_profile(prof, shift, (-80.0, 160.0), dx=DX)
        traj = evolve_periodic(st, None, f, L, 160.0, cfg)
        est = periodiclab.pulsating_mean_speed(traj.track, L, burn_in=100.0)
        rep = periodiclab.pulsating_identity_check(traj, L, c_hat=est.c_hat,
                                                   burn_in=100.0)
        return est, rep

    est_a, rep_a = one(0.0)
    est_b, rep_b = one(0.7)
    speed_gap = abs(est_a.c_hat - est_b.c_hat)
    ci = est_a.ci_halfwidth + est_b.ci_halfwidth
    speed_ok = speed_gap <= max(4.0 * ci, 1e-3 * abs(est_a.c_hat))
    return CriterionResult(
        9, "pulsating-front identity and shift-independent speed",
        bool(rep_a.residual <= 1e-2 and rep_b.residual <= 1e-2 and speed_ok),
        {"residual": f"{rep_a.residual:.2e}",
         "residual_shifted": f"{rep_b.residual:.2e}",
         "c_hat": round(est_a.c_hat, 4),
         "shift_speed_gap": f"{speed_gap:.2e}"},
        time.time() - t0)


def criterion_10() -> CriterionResult:
    """Speed estimate invariant under any bounded interface re-choice."""
    t0 = time.time()
    t = np.linspace(0.0, 1e5, 1001)
    x = 2.5 * t
    base = global_mean_speed(InterfaceTrack.from_arrays(t, x),
                             min_gap=1e4).c_hat
    rng = np.random.default_rng(20260809)
    worst = 0.0
    perturbations = [
        10.0 * np.sign(np.sin(np.arange(t.size))),          # alternating
        np.where(t > t[-1] / 2.0, 10.0, -10.0),             # coherent step
        rng.uniform(-10.0, 10.0, t.size),                   # random
        10.0 * np.sin(t / 1e3),                             # slow wave
    ]
    for d in perturbations:
        est = global_mean_speed(InterfaceTrack.from_arrays(t, x + d),
                                min_gap=1e4)
        worst = max(worst, abs(est.c_hat - base))
    return CriterionResult(
        10, "global mean speed invariant under bounded track perturbations",
        bool(worst < 1e-3),
        {"worst_shift": f"{worst:.2e}", "base": round(base, 8)},
        time.time() - t0)


_CRITERIA = {i: fn for i, fn in enumerate(
    [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
     criterion_6, criterion_7, criterion_8, criterion_9, criterion_10],
    start=1)}


def run_criterion(number: int) -> CriterionResult:
    return _CRITERIA[number]()


def run_all(numbers=None) -> list[CriterionResult]:
    numbers = sorted(numbers) if numbers else sorted(_CRITERIA)
    return [run_criterion(n) for n in numbers]
