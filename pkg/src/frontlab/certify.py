"""Certificate checks for switch-experiment trajectories.

Each check turns an inequality satisfied exactly by the continuum solution
into a measured residual on the numerical trajectory: the exponential
supersolution envelope over the switch gap, the pure-heat lower bound, the
strict 0 < u < 1 ordering, monotone growth in time, and comparison of two
fronts up to a time shift. Residuals scale with the discretization error
(second order in dx for the schemes used here), so thresholds are
conventionally tied to 10 dx^2.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import erfc, erfcx

from .errors import (
    InsufficientDataError,
    InvalidEpsError,
    InvalidInputError,
    NoComparisonError,
)
from .interface import _down_crossings
from .reaction import ReactionTerm
from .solver import FieldState, Trajectory


@dataclass(frozen=True)
class EnvelopeCertificate:
    """Fitted envelope constants plus the measured violations."""
    eps: float
    lambda_used: float
    M: float
    alpha: float
    c_eps: float                      # upper envelope amplitude
    c_eps_prime: float = np.nan       # lower envelope amplitude
    x_eps: float = np.nan             # where the lower envelope leaves 1/2
    violation_sup: float = np.nan     # max (u - upper_envelope)+ on [t1, t2]
    heat_bound_violation: float = np.nan  # max (heat_lower - u)+ at t2
    heat_closed_form_ok: bool | None = None

    def to_dict(self) -> dict:
        return {"eps": self.eps, "lambda_used": self.lambda_used,
                "M": self.M, "alpha": self.alpha, "c_eps": self.c_eps,
                "c_eps_prime": self.c_eps_prime, "x_eps": self.x_eps,
                "violation_sup": self.violation_sup,
                "heat_bound_violation": self.heat_bound_violation,
                "heat_closed_form_ok": self.heat_closed_form_ok}


def _require_gap_coverage(traj: Trajectory, t1: float, t2: float):
    times = traj.snapshot_times()
    if times[0] > t1 + 1e-9 or times[-1] < t2 - 1e-9:
        raise InsufficientDataError(
            f"trajectory [{times[0]:.6g}, {times[-1]:.6g}] does not cover "
            f"the switch gap [{t1:.6g}, {t2:.6g}]")


def _lam_from(traj: Trajectory, lam):
    if lam is not None:
        return float(lam)
    if "lambda1c" not in traj.meta:
        raise InvalidInputError(
            "trajectory carries no tail exponent; pass lam explicitly")
    return float(traj.meta["lambda1c"])


def supersolution_envelope(traj: Trajectory, r: ReactionTerm, eps: float,
                           lam: float | None = None) -> EnvelopeCertificate:
    """Check u <= min(C_eps exp(-(lam-eps)(x - alpha (t-t1))), 1) on the gap.

    C_eps is fitted as the smallest constant dominating u(t1, .); the
    envelope then travels at alpha = (lam - eps) + M / (lam - eps) with
    M = sup f(t, s)/s, which makes it an exact supersolution of the
    continuum problem, so any positive violation is scheme error.
    """
    lam = _lam_from(traj, lam)
    if not 0.0 < eps < lam:
        raise InvalidEpsError(f"eps must lie in (0, {lam:g}), got {eps}")
    t1, t2 = r.t1, r.t2
    _require_gap_coverage(traj, t1, t2)
    M = r.sup_ratio()
    k = lam - eps
    alpha = k + M / k

    s0 = traj.snapshot_at(t1, tol=1e-6)
    c_eps = float(np.max(s0.u * np.exp(k * s0.x)))

    viol = 0.0
    for s in traj.snapshots:
        if not t1 - 1e-9 <= s.t <= t2 + 1e-9:
            continue
        e = -k * (s.x - alpha * (s.t - t1))
        bar = np.minimum(c_eps * np.exp(np.minimum(e, 60.0)), 1.0)
        viol = max(viol, float((s.u - bar).max()))
    return EnvelopeCertificate(eps=float(eps), lambda_used=lam, M=float(M),
                               alpha=float(alpha), c_eps=c_eps,
                               violation_sup=max(viol, 0.0))


def heat_kernel(tau: float, z) -> np.ndarray:
    """p(tau, z) = (4 pi tau)^(-1/2) exp(-z^2 / (4 tau))."""
    z = np.asarray(z, dtype=float)
    return np.exp(-z * z / (4.0 * tau)) / np.sqrt(4.0 * np.pi * tau)


def heat_evolved_lower_profile(c_prime: float, k: float, x_eps: float,
                               tau: float, x) -> np.ndarray:
    """Exact heat evolution of min(C' exp(-k x), 1/2) after time tau.

    The initial profile equals 1/2 left of x_eps and C' exp(-k x) right of
    it; its Gaussian convolution has a closed form in erfc. The scaled
    complement erfcx keeps the right tail from overflowing.
    """
    x = np.asarray(x, dtype=float)
    s4t = np.sqrt(4.0 * tau)
    plateau = 0.25 * erfc((x - x_eps) / s4t)
    z = (x_eps - x + 2.0 * k * tau) / s4t
    tail = np.empty_like(x)
    pos = z > 0.0
    # scaled form where erfc underflows; plain form where exp would overflow
    expo = -k * x[pos] + k * k * tau - z[pos] ** 2
    tail[pos] = 0.5 * c_prime * erfcx(z[pos]) * np.exp(expo)
    tail[~pos] = 0.5 * c_prime * erfc(z[~pos]) * np.exp(
        -k * x[~pos] + k * k * tau)
    return plateau + tail


def heat_lower_bound(traj: Trajectory, eps: float,
                     cert: EnvelopeCertificate | None = None,
                     lam: float | None = None,
                     r: ReactionTerm | None = None) -> EnvelopeCertificate:
    """Check u(t2, .) >= heat evolution of min(C'_eps exp(-(lam+eps) x), 1/2).

    Dropping the nonnegative reaction makes the pure heat flow a
    subsolution, so the continuum inequality is exact. Also verifies the
    closed-form Gaussian window bound

        lower(t2, x) >= (2 C'_eps / sqrt(pi)) exp(-1 - k sqrt(4 dt)) exp(-k x)

    for x >= x_eps + sqrt(4 dt), dt = t2 - t1.
    """
    lam = _lam_from(traj, lam)
    if not 0.0 < eps < lam:
        raise InvalidEpsError(f"eps must lie in (0, {lam:g}), got {eps}")
    if r is None:
        r = traj.meta.get("reaction")
    t1, t2 = r.t1, r.t2
    _require_gap_coverage(traj, t1, t2)
    k = lam + eps
    s0 = traj.snapshot_at(t1, tol=1e-6)
    x_half = float(_down_crossings(s0.x, s0.u, 0.5)[-1])
    right = s0.x >= x_half
    vals = s0.u[right] * np.exp(np.minimum(k * s0.x[right], 700.0))
    c_prime = float(vals.min())
    x_eps = np.log(2.0 * c_prime) / k

    tau = t2 - t1
    s2 = traj.snapshot_at(t2, tol=1e-6)
    lower = heat_evolved_lower_profile(c_prime, k, x_eps, tau, s2.x)
    viol = max(float((lower - s2.u).max()), 0.0)

    xs = s2.x[s2.x >= x_eps + np.sqrt(4.0 * tau)]
    bound = (2.0 * c_prime / np.sqrt(np.pi)) * np.exp(
        -1.0 - k * np.sqrt(4.0 * tau)) * np.exp(np.maximum(-k * xs, -700.0))
    closed_ok = bool(np.all(
        heat_evolved_lower_profile(c_prime, k, x_eps, tau, xs) >= bound - 1e-8))

    if cert is None:
        cert = EnvelopeCertificate(eps=float(eps), lambda_used=lam,
                                   M=np.nan, alpha=np.nan, c_eps=np.nan)
    return replace(cert, c_eps_prime=c_prime, x_eps=float(x_eps),
                   heat_bound_violation=viol, heat_closed_form_ok=closed_ok)


@dataclass(frozen=True)
class OrderingReport:
    """Extremes of u over all snapshots, interior nodes only."""
    min_u: float
    max_u: float
    strict: bool          # 0 < u < 1 held strictly everywhere
    flagged_equilibrium: bool
    clip_count: int
    max_overshoot: float

    def to_dict(self) -> dict:
        return {"min_u": self.min_u, "max_u": self.max_u,
                "strict": self.strict,
                "flagged_equilibrium": self.flagged_equilibrium,
                "clip_count": self.clip_count,
                "max_overshoot": self.max_overshoot}


def ordering_check(traj: Trajectory) -> OrderingReport:
    lo, hi = np.inf, -np.inf
    for s in traj.snapshots:
        inner = s.u[1:-1]
        if inner.size:
            lo = min(lo, float(inner.min()))
            hi = max(hi, float(inner.max()))
    strict = bool(lo > 0.0 and hi < 1.0)
    flagged = bool(lo == hi)
    return OrderingReport(float(lo), float(hi), strict, flagged,
                          traj.clip_count, traj.max_overshoot)


@dataclass(frozen=True)
class MonotonicityReport:
    max_negative_increment: float
    tol: float
    status: str            # "pass" | "fail" | "skipped"
    warning: str = ""

    def to_dict(self) -> dict:
        return {"max_negative_increment": self.max_negative_increment,
                "tol": self.tol, "status": self.status,
                "warning": self.warning}


def _overlap(sa: FieldState, sb: FieldState):
    lo = max(sa.i_left, sb.i_left)
    hi = min(sa.i_left + sa.u.size, sb.i_left + sb.u.size)
    if hi <= lo:
        return None
    return (sa.u[lo - sa.i_left: hi - sa.i_left],
            sb.u[lo - sb.i_left: hi - sb.i_left])


def time_monotonicity_check(traj: Trajectory, tol: float | None = None,
                            r: ReactionTerm | None = None,
                            burn_in: float = 0.0) -> MonotonicityReport:
    """Largest decrease of u between consecutive snapshots (absolute frame).

    Valid for invasion runs whose reaction is nondecreasing in time; for a
    switched term this is checked as f2 >= f1 pointwise, and a violated
    hypothesis downgrades the result to "skipped" rather than failing it.
    """
    if r is None:
        r = traj.meta.get("reaction")
    if tol is None:
        tol = 10.0 * traj.meta.get("dx", 0.05) ** 2
    if r is not None and r.time_switched:
        ss = np.linspace(0.0, 1.0, 2001)
        gap = r.f1(ss) - r.f2(ss)
        if float(gap.max()) > 1e-12:
            return MonotonicityReport(np.nan, tol, "skipped",
                                      "f is not nondecreasing in time "
                                      "(f1 > f2 somewhere); hypothesis void")
    worst = -np.inf
    snaps = [s for s in traj.snapshots if s.t >= burn_in]
    for sa, sb in zip(snaps[:-1], snaps[1:]):
        pair = _overlap(sa, sb)
        if pair is None:
            continue
        ua, ub = pair
        worst = max(worst, float((ua - ub).max()))
    if not np.isfinite(worst):
        raise InsufficientDataError("no overlapping snapshot pairs")
    status = "pass" if worst <= tol else "fail"
    return MonotonicityReport(float(worst), float(tol), status)


@dataclass(frozen=True)
class ShiftReport:
    T: float
    contact_residual: float       # min gap at the optimal shift (touching)
    sup_distance: float           # sup |uB(t+T) - uA(t)| after the shift
    grid_step: float
    monotone_in_T: bool           # every larger tested shift also admissible

    def to_dict(self) -> dict:
        return {"T": self.T, "contact_residual": self.contact_residual,
                "sup_distance": self.sup_distance,
                "grid_step": self.grid_step,
                "monotone_in_T": self.monotone_in_T}


def _interp_snapshot(traj: Trajectory, t: float) -> FieldState | None:
    times = traj.snapshot_times()
    if t < times[0] - 1e-9 or t > times[-1] + 1e-9:
        return None
    j = int(np.searchsorted(times, t))
    j = min(max(j, 1), times.size - 1)
    sa, sb = traj.snapshots[j - 1], traj.snapshots[j]
    if abs(sa.t - t) < 1e-12:
        return sa
    if abs(sb.t - t) < 1e-12:
        return sb
    w = (t - sa.t) / (sb.t - sa.t)
    pair = _overlap(sa, sb)
    if pair is None:
        return None
    lo = max(sa.i_left, sb.i_left)
    u = (1.0 - w) * pair[0] + w * pair[1]
    return FieldState(t, lo, sa.dx, u)


def shift_comparison(traj_a: Trajectory, traj_b: Trajectory,
                     search_range: tuple[float, float] | None = None,
                     tol: float | None = None,
                     grid_step: float | None = None,
                     n_compare: int = 25) -> ShiftReport:
    """Smallest time shift T with uB(t + T, .) >= uA(t, .) - tol.

    Shifts are scanned on a uniform grid; for invasion fronts (u increasing
    in t) admissibility is monotone in T, which is also verified on the
    scanned grid. Reports the touching residual at the optimal shift and
    the sup-norm distance after it.
    """
    ta = traj_a.snapshot_times()
    tb = traj_b.snapshot_times()
    if tol is None:
        tol = 10.0 * traj_a.meta.get("dx", 0.05) ** 2
    if grid_step is None:
        da = np.diff(ta)
        grid_step = float(np.median(da)) if da.size else 1.0
    if search_range is None:
        search_range = (0.0, (tb[-1] - tb[0]) / 2.0)
    lo, hi = search_range
    ts = np.arange(lo, hi + grid_step / 2.0, grid_step)
    compare_t = np.linspace(ta[0], ta[-1], n_compare)

    def min_gap(T: float):
        worst = np.inf
        found = False
        for t in compare_t:
            sb = _interp_snapshot(traj_b, t + T)
            sa = _interp_snapshot(traj_a, t)
            if sa is None or sb is None:
                continue
            pair = _overlap(sa, sb)
            if pair is None:
                continue
            found = True
            worst = min(worst, float((pair[1] - pair[0]).min()))
        return worst if found else None

    gaps = [(T, min_gap(T)) for T in ts]
    valid = [(T, g) for T, g in gaps if g is not None]
    if not valid:
        raise NoComparisonError("no comparable snapshot overlap in the range")
    admissible = [(T, g) for T, g in valid if g >= -tol]
    if not admissible:
        best = max(valid, key=lambda p: p[1])
        raise NoComparisonError(
            f"no admissible shift in [{lo:g}, {hi:g}]: closest at "
            f"T={best[0]:.6g} with ordering violated by {-best[1]:.3e}")
    T_opt, gap_opt = admissible[0]
    tail = [g >= -tol for T, g in valid if T >= T_opt]
    monotone = bool(all(tail))

    sup = 0.0
    for t in compare_t:
        sb = _interp_snapshot(traj_b, t + T_opt)
        sa = _interp_snapshot(traj_a, t)
        if sa is None or sb is None:
            continue
        pair = _overlap(sa, sb)
        if pair is None:
            continue
        sup = max(sup, float(np.abs(pair[1] - pair[0]).max()))
    return ShiftReport(float(T_opt), float(gap_opt), float(sup),
                       float(grid_step), monotone)
