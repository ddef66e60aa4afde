"""Interface tracking and global mean speed estimation.

The interface of a front-like field at level lambda is the rightmost
down-crossing of that level; a track collects its position over time.
The global mean speed is estimated from position differences over long
time gaps, which makes it insensitive to any bounded re-choice of the
interface points (the estimator only sees |x_t - x_s| / |t - s| with
|t - s| large).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, InvalidInputError, NoCrossingError


@dataclass(frozen=True)
class LevelCrossings:
    """All down-crossings of a level at one time; the rightmost is canonical."""
    level: float
    canonical: float
    all_crossings: np.ndarray

    @property
    def multiplicity(self) -> int:
        return int(self.all_crossings.size)


def _down_crossings(x: np.ndarray, u: np.ndarray, lam: float) -> np.ndarray:
    above = u >= lam
    idx = np.where(above[:-1] & ~above[1:])[0]
    if idx.size == 0:
        return np.empty(0)
    frac = (u[idx] - lam) / (u[idx] - u[idx + 1])
    return x[idx] + frac * (x[idx + 1] - x[idx])


def level_position(state, lam: float) -> LevelCrossings:
    """Locate the level lam in a field (anything with .x and .u arrays).

    Linear interpolation of every down-crossing; raises NoCrossingError
    when the field never crosses the level.
    """
    if not 0.0 < lam < 1.0:
        raise InvalidInputError(f"level must lie in (0, 1), got {lam}")
    x = np.asarray(state.x, dtype=float)
    u = np.asarray(state.u, dtype=float)
    xs = _down_crossings(x, u, lam)
    if xs.size == 0:
        raise NoCrossingError(f"field does not cross level {lam}")
    return LevelCrossings(lam, float(xs[-1]), xs)


class InterfaceTrack:
    """Append-only record of (t, x_t) for one level, plus window bounds."""

    def __init__(self, level: float = 0.5):
        self.level = level
        self._t: list[float] = []
        self._x: list[float] = []
        self._mult: list[int] = []
        self._wl: list[float] = []
        self._wr: list[float] = []

    def append(self, t: float, x: float, multiplicity: int = 1,
               window_left: float = np.nan, window_right: float = np.nan):
        if self._t and t <= self._t[-1]:
            raise InvalidInputError(f"track times must increase (got {t} after {self._t[-1]})")
        self._t.append(float(t))
        self._x.append(float(x))
        self._mult.append(int(multiplicity))
        self._wl.append(float(window_left))
        self._wr.append(float(window_right))

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self._t)

    @property
    def x(self) -> np.ndarray:
        return np.asarray(self._x)

    @property
    def multiplicity(self) -> np.ndarray:
        return np.asarray(self._mult)

    def __len__(self) -> int:
        return len(self._t)

    @classmethod
    def from_arrays(cls, t, x, level: float = 0.5) -> "InterfaceTrack":
        tr = cls(level)
        for ti, xi in zip(np.asarray(t, float), np.asarray(x, float)):
            tr.append(ti, xi)
        return tr

    def restricted(self, t_lo: float, t_hi: float) -> "InterfaceTrack":
        mask = (self.t >= t_lo) & (self.t <= t_hi)
        return InterfaceTrack.from_arrays(self.t[mask], self.x[mask], self.level)

    def export_csv(self, path, extra_levels: dict[float, np.ndarray] | None = None):
        """Columns: t, x_half, one column per extra level, window bounds."""
        extra_levels = extra_levels or {}
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            header = ["t", f"x_{self.level:g}"]
            header += [f"x_{lv:g}" for lv in extra_levels]
            header += ["window_left", "window_right"]
            w.writerow(header)
            for i in range(len(self)):
                row = [f"{self._t[i]:.17g}", f"{self._x[i]:.17g}"]
                row += [f"{col[i]:.17g}" for col in extra_levels.values()]
                row += [f"{self._wl[i]:.17g}", f"{self._wr[i]:.17g}"]
                w.writerow(row)


@dataclass(frozen=True)
class SpeedEstimate:
    c_hat: float
    ci_halfwidth: float
    window: tuple[float, float]
    log_correction_used: bool
    single_speed: bool           # early/late sub-window estimates agree
    early_late: tuple[float, float]

    def to_dict(self) -> dict:
        return {"c_hat": self.c_hat, "ci_halfwidth": self.ci_halfwidth,
                "window": list(self.window),
                "log_correction_used": self.log_correction_used,
                "single_speed": self.single_speed,
                "early_late": list(self.early_late)}


def _pair_slope(t: np.ndarray, x: np.ndarray, min_gap: float,
                max_samples: int = 1200) -> tuple[float, float]:
    if t.size > max_samples:
        sel = np.unique(np.linspace(0, t.size - 1, max_samples).astype(int))
        t, x = t[sel], x[sel]
    dt = t[:, None] - t[None, :]
    dx = x[:, None] - x[None, :]
    mask = dt >= min_gap
    if not np.any(mask):
        raise InsufficientDataError(
            f"no sample pairs separated by at least {min_gap}")
    dts = dt[mask]
    dxs = dx[mask]
    c = float((dxs * dts).sum() / (dts * dts).sum())
    resid = dxs - c * dts
    se = float(np.sqrt((resid ** 2).sum() / max(dts.size - 1, 1) / (dts ** 2).sum()))
    return c, 1.96 * se


def _log_corrected_slope(t: np.ndarray, x: np.ndarray) -> tuple[float, float]:
    # x = c t - k log(t - t0 + 1) + b; the log regressor absorbs the slow
    # level drift of minimal-speed fronts
    reg = np.log(t - t[0] + 1.0)
    design = np.column_stack([t, reg, np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(design, x, rcond=None)
    resid = x - design @ coef
    dof = max(t.size - 3, 1)
    sigma2 = float((resid ** 2).sum()) / dof
    cov = sigma2 * np.linalg.inv(design.T @ design)
    return float(coef[0]), 1.96 * float(np.sqrt(max(cov[0, 0], 0.0)))


def global_mean_speed(track: InterfaceTrack, min_gap: float,
                      log_correction: bool = False) -> SpeedEstimate:
    """Least-squares speed from position differences with |t - s| >= min_gap.

    With log_correction a direct fit x = c t - k log t + b is used instead,
    which converges at desk scale for minimal-speed runs where the plain
    slope is still drifting.
    """
    t, x = track.t, track.x
    if t.size < 4:
        raise InsufficientDataError("track holds fewer than 4 samples")
    span = t[-1] - t[0]
    if span < 3.0 * min_gap:
        raise InsufficientDataError(
            f"track span {span:g} is below 3 * min_gap = {3*min_gap:g}")
    if log_correction:
        c, ci = _log_corrected_slope(t, x)
    else:
        c, ci = _pair_slope(t, x, min_gap)

    # early/late thirds with a gap scaled to fit inside them
    third = span / 3.0
    sub_gap = min(min_gap, third / 3.0)
    lo = t[0] + third
    hi = t[-1] - third
    m_early, m_late = t <= lo, t >= hi
    single = True
    c_e = c_l = c
    if m_early.sum() >= 4 and m_late.sum() >= 4:
        try:
            c_e, _ = _pair_slope(t[m_early], x[m_early], sub_gap)
            c_l, _ = _pair_slope(t[m_late], x[m_late], sub_gap)
            scale = max(abs(c), abs(c_e), abs(c_l), 1e-12)
            single = abs(c_l - c_e) / scale <= 0.02 + 2.0 * ci / scale
        except InsufficientDataError:
            pass
    return SpeedEstimate(c, ci, (float(t[0]), float(t[-1])),
                         log_correction, single, (c_e, c_l))


def invasion_check(track: InterfaceTrack, tol: float = 1e-6) -> bool:
    """True when x_t is nondecreasing (up to tol) and diverges with the span.

    The divergence threshold is 20% of (fitted speed scale x span), so no
    absolute length is hard-coded.
    """
    t, x = track.t, track.x
    if t.size == 0:
        raise InsufficientDataError("empty track")
    if t.size == 1:
        return False
    if np.any(np.diff(x) < -tol):
        return False
    span = t[-1] - t[0]
    slope = float(np.polyfit(t, x, 1)[0])
    return (x[-1] - x[0]) >= 0.2 * abs(slope) * span


@dataclass(frozen=True)
class LevelDistanceRecord:
    level: float
    max_distance: float
    attained: bool      # False: level never crossed, bound vacuously holds
    passed: bool


@dataclass(frozen=True)
class CriteriaReport:
    """Executable front-localization criteria.

    level_distances: for each level, sup over time of the distance between
    any crossing of that level and the canonical interface (bounded for a
    genuine front, divergent for a flattening solution).
    band_inf/band_sup: extremes of u over the tube |x - x_t| <= C across
    time; a front stays strictly inside (0, 1) there.
    """
    level_distances: tuple[LevelDistanceRecord, ...]
    band_inf: float
    band_sup: float
    band_halfwidth: float
    eps: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "levels": [{"level": r.level, "max_distance": r.max_distance,
                        "attained": r.attained, "passed": r.passed}
                       for r in self.level_distances],
            "band_inf": self.band_inf, "band_sup": self.band_sup,
            "band_halfwidth": self.band_halfwidth, "eps": self.eps,
            "passed": self.passed,
        }


def verify_transition_criteria(traj, track: InterfaceTrack, levels,
                               C: float, max_distance: float | None = None,
                               eps: float = 1e-3) -> CriteriaReport:
    """Check the level-distance bound and the near-interface band on a trajectory.

    For each requested level the distance from every crossing to the
    canonical interface position is bounded by max_distance (default: the
    smaller window margin). Over the tube |x - x_t| <= C the solution must
    stay inside [eps, 1 - eps].
    """
    snaps = traj.snapshots
    if not snaps:
        raise InsufficientDataError("trajectory holds no snapshots")
    if max_distance is None:
        if len(track):
            s0 = snaps[0]
            max_distance = min(track.x[0] - s0.x[0], s0.x[-1] - track.x[0])
        else:
            max_distance = np.inf

    canon = {  # canonical interface per snapshot time
        float(s.t): float(_down_crossings(s.x, s.u, track.level)[-1])
        for s in snaps if _down_crossings(s.x, s.u, track.level).size
    }
    dists = {lv: 0.0 for lv in levels}
    attained = {lv: False for lv in levels}
    binf, bsup = np.inf, -np.inf
    for s in snaps:
        t = float(s.t)
        if t not in canon:
            continue
        xt = canon[t]
        for lv in levels:
            xs = _down_crossings(s.x, s.u, lv)
            if xs.size:
                attained[lv] = True
                dists[lv] = max(dists[lv], float(np.abs(xs - xt).max()))
        if C > 0.0:
            mask = np.abs(s.x - xt) <= C
            if np.any(mask):
                binf = min(binf, float(s.u[mask].min()))
                bsup = max(bsup, float(s.u[mask].max()))
        uc = float(np.interp(xt, s.x, s.u))
        binf = min(binf, uc)
        bsup = max(bsup, uc)

    recs = tuple(
        LevelDistanceRecord(lv, dists[lv], attained[lv],
                            bool(dists[lv] < max_distance))
        for lv in levels)
    band_ok = bool(binf > eps and bsup < 1.0 - eps)
    return CriteriaReport(recs, float(binf), float(bsup), float(C), eps,
                          bool(all(r.passed for r in recs) and band_ok))
