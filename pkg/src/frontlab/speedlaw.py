"""Speed selection across a time switch of the reaction.

A front built for f1 at speed c1 carries a tail exponent lam1 into the
switch. After the medium settles on f2 the solution relaxes onto an f2
front whose speed is dictated by that inherited tail:

    c2 = lam1 + f2'(0) / lam1     if lam1 < lam2_minus (tail flatter than
                                  the critical rate of f2 -- the tail wins),
    c2 = cstar2                   otherwise (tail steeper than critical --
                                  the minimal f2 front takes over).

Here lam2_minus = (cstar2 - sqrt(cstar2^2 - 4 f2'(0)))/2. The map
lam -> lam + f2'(0)/lam attains its minimum 2 sqrt(f2'(0)) at
lam = sqrt(f2'(0)), so the two branches meet continuously and c2 never
falls below cstar2. The late-time speed depends only on (f1, f2, c1),
not on the rate profile inside the switch gap; the experiment driver
checks that by rerunning with different gap blends.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import interface
from .errors import ConstructionError, InvalidInputError, TailResolutionError
from .profile import decay_exponent, fit_tail_arrays, minimal_speed, solve_profile
from .reaction import (
    BLEND_SMOOTHSTEP,
    Nonlinearity,
    hump,
    logistic,
    time_switched,
)
from .solver import SolverConfig, evolve, init_from_profile

BRANCH_TAIL = "tail-carried"      # inherited decay selects the speed
BRANCH_MINIMAL = "minimal"        # minimal f2 front takes over

_KPP_TOL = 1e-10
_CSTAR_BISECT_TOL = 1e-3


@dataclass(frozen=True)
class SwitchPrediction:
    c1: float
    cstar1: float
    cstar2: float
    lambda_1c1: float
    lambda_2_star_minus: float
    branch: str
    c2_predicted: float
    cstar_source: tuple[str, str]       # "closed-form" (KPP) or "bisection"
    c2_sensitivity: float               # |dc2| under cstar1 bisection error

    def to_dict(self) -> dict:
        return {
            "c1": self.c1, "cstar1": self.cstar1, "cstar2": self.cstar2,
            "lambda_1c1": self.lambda_1c1,
            "lambda_2_star_minus": self.lambda_2_star_minus,
            "branch": self.branch, "c2_predicted": self.c2_predicted,
            "cstar_source": list(self.cstar_source),
            "c2_sensitivity": self.c2_sensitivity,
        }


def _cstar(nl: Nonlinearity) -> tuple[float, str]:
    """Minimal speed: closed form 2 sqrt(f'(0)) for sub-tangential f,
    bisection otherwise (operational value, flagged as numeric)."""
    from .reaction import time_independent
    term = time_independent(nl)
    check = term.is_kpp("f1")
    fp0 = term.derivative_at_zero("f1")
    if check.ok:
        return 2.0 * np.sqrt(fp0), "closed-form"
    return minimal_speed(nl, tol=_CSTAR_BISECT_TOL), "bisection"


def _c2_from(lam1: float, fp2: float, lam2_minus: float, cstar2: float) -> float:
    if lam1 < lam2_minus:
        return lam1 + fp2 / lam1
    return cstar2


def predict_c2(f1: Nonlinearity, f2: Nonlinearity, c1: float,
               tol: float = 1e-9) -> SwitchPrediction:
    """Predict the post-switch speed from (f1, f2, c1)."""
    from .reaction import derivative_at_zero
    fp1, _ = derivative_at_zero(f1)
    fp2, _ = derivative_at_zero(f2)
    cstar1, src1 = _cstar(f1)
    cstar2, src2 = _cstar(f2)
    if c1 < cstar1 - max(tol, _CSTAR_BISECT_TOL * cstar1):
        raise InvalidInputError(
            f"c1 = {c1} below the minimal speed {cstar1:.6g} of f1")
    c1_eff = max(c1, cstar1)
    lam1 = decay_exponent(fp1, cstar1, c1_eff)
    # slow root at the minimal speed of f2 (not the profile decay there,
    # which sits on the fast branch): the critical rate the inherited tail
    # is compared against; snap rounding dust off the discriminant, which
    # is exactly zero for a sub-tangential f2
    disc2 = cstar2 ** 2 - 4.0 * fp2
    if abs(disc2) < 1e-12 * (1.0 + cstar2 ** 2):
        disc2 = 0.0
    lam2_minus = (cstar2 - np.sqrt(max(disc2, 0.0))) / 2.0
    branch = BRANCH_TAIL if lam1 < lam2_minus else BRANCH_MINIMAL
    c2 = _c2_from(lam1, fp2, lam2_minus, cstar2)

    sens = 0.0
    if src1 == "bisection":
        # propagate the bisection half-width through the pipeline
        d = _CSTAR_BISECT_TOL * cstar1
        for cs in (cstar1 - d, cstar1 + d):
            lam = decay_exponent(fp1, cs, max(c1, cs))
            sens = max(sens, abs(_c2_from(lam, fp2, lam2_minus, cstar2) - c2))
    return SwitchPrediction(float(c1), float(cstar1), float(cstar2),
                            float(lam1), float(lam2_minus), branch, float(c2),
                            (src1, src2), float(sens))


@dataclass
class SwitchReport:
    prediction: SwitchPrediction
    c2_measured: float
    c2_aitken: float
    rel_error: float
    tolerance: float
    passed: bool
    tail_lambda_at_switch_end: float
    profile_residuals: list[tuple[float, float]]  # (t, sup-norm vs f2 front)
    speed_estimate: interface.SpeedEstimate
    trajectory: object = None

    def to_dict(self) -> dict:
        return {
            "prediction": self.prediction.to_dict(),
            "c2_measured": self.c2_measured,
            "c2_aitken": self.c2_aitken,
            "rel_error": self.rel_error,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "tail_lambda_at_switch_end": self.tail_lambda_at_switch_end,
            "profile_residuals": [[t, r] for t, r in self.profile_residuals],
            "speed_estimate": self.speed_estimate.to_dict(),
        }


def _aitken(seq: np.ndarray) -> float:
    """Aitken delta-squared on the last three terms (falls back to the last)."""
    if seq.size < 3:
        return float(seq[-1])
    a, b, c = seq[-3], seq[-2], seq[-1]
    denom = c - 2.0 * b + a
    if abs(denom) < 1e-14 * max(abs(a), abs(c), 1e-30):
        return float(c)
    return float(c - (c - b) ** 2 / denom)


def _field_tail_lambda(state) -> float:
    mask = (state.u > 1e-8) & (state.u < 0.02)
    if mask.sum() < 8:
        raise TailResolutionError("too few tail nodes to fit the decay rate")
    fit = fit_tail_arrays(state.x[mask], state.u[mask],
                          (float(state.x[mask][0]), float(state.x[mask][-1])))
    return fit.lam


def run_switch_experiment(f1: Nonlinearity, f2: Nonlinearity, c1: float,
                          gap_blend: str = BLEND_SMOOTHSTEP,
                          cfg: SolverConfig | None = None, *,
                          t1: float = 0.0, t2: float = 10.0,
                          horizon: float = 200.0, burn_in: float = 50.0,
                          rel_tol: float = 0.05,
                          keep_trajectory: bool = True) -> SwitchReport:
    """Run the switch scenario and compare measured to predicted speed.

    Starts from the f1 front at speed c1 at time t1, evolves through the
    switch gap and for `horizon` time units beyond t2, then estimates the
    late-time speed on [t2 + burn_in, t_end]. Also fits the tail at the
    end of the gap (guarding against an under-resolved inherited decay)
    and records sup-norm residuals against the shifted f2 front at a few
    late times.
    """
    pred = predict_c2(f1, f2, c1)
    lam1 = pred.lambda_1c1
    prof1 = solve_profile(f1, max(c1, pred.cstar1))
    if cfg is None:
        cfg = SolverConfig(scheme="imex_cn", dt=0.1,
                           window_right=max(150.0, 80.0 / lam1))
    r = time_switched(f1, f2, t1, t2, blend=gap_blend)
    t_end = t2 + horizon
    w = (-cfg.window_left, cfg.window_right if cfg.window_right is not None
         else max(150.0, 80.0 / lam1))
    state = init_from_profile(prof1, 0.0, w, dx=cfg.dx, t0=t1)
    traj = evolve(state, r, t_end, cfg)
    traj.meta.update({"lambda1c": lam1, "c1": c1, "t1": t1, "t2": t2,
                      "prediction": pred})

    # like-for-like guard: the same windowed fit applied to the initial
    # state (a degenerate critical tail has an effective slope genuinely
    # below lam1, so the analytic exponent is the wrong reference there)
    lam_ref = _field_tail_lambda(traj.snapshots[0])
    lam_at_t2 = _field_tail_lambda(traj.snapshot_at(t2))
    if abs(lam_at_t2 - lam_ref) > 0.10 * lam_ref:
        raise TailResolutionError(
            f"tail exponent at the switch end drifted to {lam_at_t2:.4g} "
            f"(inherited {lam_ref:.4g}; more than 10% off)")

    late = traj.track.restricted(t2 + burn_in, t_end)
    span = late.t[-1] - late.t[0]
    est = interface.global_mean_speed(late, min_gap=span / 3.0,
                                      log_correction=(pred.branch == BRANCH_MINIMAL))

    # slope over growing sub-windows, Aitken-extrapolated
    ladders = np.linspace(late.t[0] + span / 3.0, late.t[-1], 6)
    slopes = []
    for T in ladders:
        sub = late.restricted(late.t[0], T)
        slopes.append(np.polyfit(sub.t, sub.x, 1)[0])
    c2_ait = _aitken(np.asarray(slopes))

    prof2 = solve_profile(f2, max(pred.c2_predicted, pred.cstar2))
    residuals = []
    for tq in np.linspace(t2 + burn_in, t_end, 4):
        s = traj.snapshot_at(tq)
        xs = interface.level_position(s, 0.5).canonical
        ref = prof2.sample(s.x - xs)
        inner = (s.u > 1e-6) & (s.u < 1.0 - 1e-6)
        residuals.append((float(s.t), float(np.abs(s.u - ref)[inner].max())))

    rel_err = abs(est.c_hat - pred.c2_predicted) / abs(pred.c2_predicted)
    report = SwitchReport(pred, est.c_hat, c2_ait, float(rel_err), rel_tol,
                          bool(rel_err <= rel_tol), float(lam_at_t2),
                          residuals, est,
                          traj if keep_trajectory else None)
    return report


@dataclass(frozen=True)
class ExamplePair:
    """An (f1, f2) pair exhibiting slow-down at the minimal speed and
    acceleration at every supercritical speed."""
    f1: Nonlinearity
    f2: Nonlinearity
    cstar1: float
    cstar2: float
    bump_mass: float
    eps: float


def construct_example_pair(M: float, eps: float,
                           fprime2: float = 1.0) -> ExamplePair:
    """Build f2 = KPP logistic and f1 = small base + tall bump near s = 1.

    Requires sqrt(2 M) > cstar2 = 2 sqrt(f2'(0)), which drives the measured
    minimal speed of f1 above cstar2 for small eps. Positivity of f1 on
    (0, 1) is verified on a fine grid.
    """
    cstar2 = 2.0 * np.sqrt(fprime2)
    if np.sqrt(2.0 * M) <= cstar2:
        raise ConstructionError(
            f"need sqrt(2M) = {np.sqrt(2*M):.4g} > cstar2 = {cstar2:.4g}; "
            "increase M or decrease f2'(0)")
    f2 = logistic(fprime2)
    f1 = hump(0.5 * fprime2, M, eps)
    ss = np.linspace(0.0, 1.0, 4001)[1:-1]
    if np.any(f1(ss) <= 0.0):
        raise ConstructionError("hump construction lost positivity on (0, 1)")
    cstar1 = minimal_speed(f1, tol=_CSTAR_BISECT_TOL)
    if not cstar1 > cstar2:
        raise ConstructionError(
            f"measured cstar1 = {cstar1:.4g} not above cstar2 = {cstar2:.4g}; "
            "decrease eps")
    return ExamplePair(f1, f2, float(cstar1), float(cstar2), float(M), float(eps))
