"""Pulsating-front identity checks in 1D x-periodic media.

A front locked to an L-periodic medium and traveling at mean speed c
repeats itself one period later in space after L/c in time:

    u(t + L/c, x) = u(t, x - L).

On a line (no transverse geometry) the geodesic correction factor is 1.
The residual of this identity, evaluated over many snapshot pairs after a
burn-in, measures how close a run is to the pulsating attractor; the mean
speed itself must not depend on where the initial front was placed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, InvalidInputError
from .interface import InterfaceTrack, SpeedEstimate, global_mean_speed
from .solver import FieldState, Trajectory


@dataclass(frozen=True)
class PulsatingReport:
    L: float
    c_hat: float
    residual: float          # sup |u(t + L/c, x) - u(t, x - L)| over pairs
    gamma: float             # 1 on the line (domain invariant along the axis)
    n_pairs: int
    burn_in: float

    def to_dict(self) -> dict:
        return {"L": self.L, "c_hat": self.c_hat, "residual": self.residual,
                "gamma": self.gamma, "n_pairs": self.n_pairs,
                "burn_in": self.burn_in}


def _shift_cells(state: FieldState, cells: int) -> FieldState:
    """u(t, x - L) on the same grid: relabel the window by whole cells."""
    return FieldState(state.t, state.i_left + cells, state.dx, state.u)


def pulsating_mean_speed(track: InterfaceTrack, L: float,
                         burn_in: float = 0.0) -> SpeedEstimate:
    """Mean speed of a pulsating track, phase-locked to the period.

    The level position of a pulsating front oscillates within each period
    L/c, which biases a plain slope fit by the window phase. Resampling the
    track at integer multiples of the period removes the oscillation; one
    refinement pass updates the period from the measured speed.
    """
    t, x = track.t, track.x
    mask = t >= burn_in
    t, x = t[mask], x[mask]
    if t.size < 8:
        raise InsufficientDataError("too few track samples after burn-in")
    span = t[-1] - t[0]
    c = float(np.polyfit(t, x, 1)[0])
    ci = np.nan
    for _ in range(2):
        if c <= 0.0:
            raise InvalidInputError(f"pulsating speed estimate needs c > 0, got {c}")
        period = L / c
        n = int(span / period)
        if n < 3:
            raise InsufficientDataError(
                f"track span {span:g} holds fewer than 3 periods {period:g}")
        tj = t[0] + period * np.arange(n + 1)
        xj = np.interp(tj, t, x)
        coef = np.polyfit(tj, xj, 1)
        fitted = np.polyval(coef, tj)
        sigma2 = float(((xj - fitted) ** 2).sum()) / max(tj.size - 2, 1)
        denom = float(((tj - tj.mean()) ** 2).sum())
        ci = 1.96 * np.sqrt(sigma2 / denom)
        c = float(coef[0])
    # locking onto the pulsating attractor is slow; the residual-based ci
    # understates that systematic drift, so fold in the half-window
    # disagreement as a drift-aware error bar
    h = tj.size // 2
    c_early = float(np.polyfit(tj[:h], xj[:h], 1)[0])
    c_late = float(np.polyfit(tj[h:], xj[h:], 1)[0])
    ci = max(float(ci), abs(c_late - c_early) / 2.0)
    return SpeedEstimate(c, ci, (float(t[0]), float(t[-1])),
                         False, True, (c_early, c_late))


def _interp_in_time(traj: Trajectory, t: float) -> FieldState | None:
    times = traj.snapshot_times()
    if t < times[0] - 1e-9 or t > times[-1] + 1e-9:
        return None
    j = int(np.clip(np.searchsorted(times, t), 1, times.size - 1))
    sa, sb = traj.snapshots[j - 1], traj.snapshots[j]
    for s in (sa, sb):
        if abs(s.t - t) < 1e-12:
            return s
    lo = max(sa.i_left, sb.i_left)
    hi = min(sa.i_left + sa.u.size, sb.i_left + sb.u.size)
    if hi <= lo:
        return None
    w = (t - sa.t) / (sb.t - sa.t)
    u = ((1.0 - w) * sa.u[lo - sa.i_left: hi - sa.i_left]
         + w * sb.u[lo - sb.i_left: hi - sb.i_left])
    return FieldState(t, lo, sa.dx, u)


def pulsating_identity_check(traj: Trajectory, L: float,
                             c_hat: float | None = None,
                             burn_in: float = 100.0) -> PulsatingReport:
    """Residual of u(t + L/c_hat, x) = u(t, x - L) over snapshot pairs.

    The spatial shift must be a whole number of cells (choose dx dividing
    L), so only the time direction is interpolated: exactly when t + L/c
    lands within half a step of a stored snapshot, linearly otherwise.
    """
    snaps = traj.snapshots
    if not snaps:
        raise InsufficientDataError("trajectory holds no snapshots")
    dx = snaps[0].dx
    cells = L / dx
    if abs(cells - round(cells)) > 1e-9:
        raise InvalidInputError(
            f"dx = {dx} does not divide the period L = {L}; the x - L shift "
            "would need interpolation and contaminate the residual")
    cells = int(round(cells))
    if c_hat is None:
        est = global_mean_speed(traj.track,
                                min_gap=(traj.track.t[-1] - traj.track.t[0]) / 3.0)
        c_hat = est.c_hat
    if c_hat <= 0.0:
        raise InvalidInputError(f"pulsating period needs c_hat > 0, got {c_hat}")
    period = L / c_hat

    times = traj.snapshot_times()
    residual = 0.0
    n_pairs = 0
    for s in snaps:
        if s.t < burn_in or s.t + period > times[-1] + 1e-9:
            continue
        later = _interp_in_time(traj, s.t + period)
        if later is None:
            continue
        shifted = _shift_cells(s, cells)
        lo = max(later.i_left, shifted.i_left)
        hi = min(later.i_left + later.u.size, shifted.i_left + shifted.u.size)
        if hi <= lo:
            continue
        diff = (later.u[lo - later.i_left: hi - later.i_left]
                - shifted.u[lo - shifted.i_left: hi - shifted.i_left])
        residual = max(residual, float(np.abs(diff).max()))
        n_pairs += 1
    if n_pairs == 0:
        raise InsufficientDataError(
            f"no snapshot pairs separated by L/c_hat = {period:.4g} after "
            f"burn-in {burn_in:g}")
    return PulsatingReport(float(L), float(c_hat), residual, 1.0,
                           n_pairs, float(burn_in))
