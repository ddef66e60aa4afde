"""Time stepping for u_t = u_xx + f(t, u) and the x-periodic variant
u_t = (a(x) u_x)_x + f(x, u) on a moving window.

Diffusion is advanced implicitly (tridiagonal solve), reaction explicitly;
with the backward-Euler scheme the full step is order-preserving whenever
dt * Lip(f) < 1, so discrete sub/supersolution arguments carry over. The
Strang variant (reaction half-steps around a Crank-Nicolson diffusion
step) is second order in dt for speed-critical runs, at the price of
unconditional monotonicity.

The window follows a chosen level of the solution. Cells entering on the
left are filled with the invaded-state value 1; cells entering on the
right continue the exponential tail fitted from the live field, then 0 --
a hard zero fill would steepen the decay that selects the front speed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import (
    BlowUpError,
    FrontLostError,
    InvalidInputError,
    WindowTooNarrowError,
)
from .interface import InterfaceTrack, _down_crossings
from .profile import FrontProfile
from .reaction import CLIP_BAND, ReactionTerm

SCHEME_BE = "imex_be"
SCHEME_CN = "imex_cn"
BC_DIRICHLET = "dirichlet_limits"
BC_NEUMANN = "neumann_zero"
BC_DECAY = "dirichlet_decay"
POLICY_FOLLOW = "follow_level"
POLICY_FIXED = "fixed"


@dataclass(frozen=True)
class SolverConfig:
    dx: float = 0.05
    dt: float | None = None          # default: min(0.25, 0.5 / Lip(f))
    scheme: str = SCHEME_BE
    window_left: float = 80.0        # target margin from the level to the left edge
    window_right: float | None = None  # default: max(150, 80 / expected tail rate)
    window_policy: str = POLICY_FOLLOW
    follow_level: float = 0.5
    boundary: str = BC_DECAY
    snapshot_stride: int = 10

    def __post_init__(self):
        if self.dx <= 0.0:
            raise InvalidInputError(f"dx must be positive, got {self.dx}")
        if self.dt is not None and self.dt <= 0.0:
            raise InvalidInputError(f"dt must be positive, got {self.dt}")
        if self.scheme not in (SCHEME_BE, SCHEME_CN):
            raise InvalidInputError(f"unknown scheme {self.scheme!r}")
        if self.boundary not in (BC_DIRICHLET, BC_NEUMANN, BC_DECAY):
            raise InvalidInputError(f"unknown boundary {self.boundary!r}")
        if self.window_policy not in (POLICY_FOLLOW, POLICY_FIXED):
            raise InvalidInputError(f"unknown window policy {self.window_policy!r}")
        if self.snapshot_stride < 1:
            raise InvalidInputError("snapshot_stride must be >= 1")

    def resolve_dt(self, lipschitz: float) -> float:
        if self.dt is not None:
            if self.dt * lipschitz >= 1.0:
                raise InvalidInputError(
                    f"dt = {self.dt} violates dt * Lip(f) = "
                    f"{self.dt * lipschitz:.3g} < 1")
            return self.dt
        return min(0.25, 0.5 / max(lipschitz, 1e-12))


@dataclass
class FieldState:
    """Solution snapshot on a uniform window.

    Absolute coordinates are carried as an integer cell offset so window
    shifts are exact: x_j = (i_left + j) * dx.
    """

    t: float
    i_left: int
    dx: float
    u: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return (self.i_left + np.arange(self.u.size)) * self.dx

    @property
    def window(self) -> tuple[float, float]:
        return (self.i_left * self.dx, (self.i_left + self.u.size - 1) * self.dx)

    def copy(self) -> "FieldState":
        return FieldState(self.t, self.i_left, self.dx, self.u.copy())


@dataclass
class Trajectory:
    """Recorded history of one run: sampled snapshots, the interface track,
    window-shift events and clipping statistics."""

    snapshots: list[FieldState] = field(default_factory=list)
    track: InterfaceTrack | None = None
    events: list[dict] = field(default_factory=list)
    clip_count: int = 0
    max_overshoot: float = 0.0
    meta: dict = field(default_factory=dict)

    def snapshot_times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def snapshot_at(self, t: float, tol: float | None = None) -> FieldState:
        times = self.snapshot_times()
        i = int(np.argmin(np.abs(times - t)))
        if tol is not None and abs(times[i] - t) > tol:
            raise InvalidInputError(f"no snapshot within {tol} of t = {t}")
        return self.snapshots[i]

    def export_snapshots_csv(self, directory) -> None:
        """One (t, x, u) CSV per snapshot."""
        import os
        os.makedirs(directory, exist_ok=True)
        for i, s in enumerate(self.snapshots):
            path = os.path.join(directory, f"snap_{i:05d}.csv")
            with open(path, "w") as fh:
                fh.write("t,x,u\n")
                for xj, uj in zip(s.x, s.u):
                    fh.write(f"{s.t:.17g},{xj:.17g},{uj:.17g}\n")

    def export_shift_log(self, path) -> None:
        """Window-shift events as JSON lines."""
        with open(path, "w") as fh:
            for ev in self.events:
                fh.write(json.dumps(ev) + "\n")


def init_from_profile(p: FrontProfile, shift: float,
                      window: tuple[float, float], dx: float = 0.05,
                      t0: float = 0.0, edge_tol_left: float = 1e-6,
                      edge_tol_right: float = 1e-9) -> FieldState:
    """Sample u(x) = phi(x - shift) on a window, tails extended exponentially.

    The window must be wide enough that the profile is within edge_tol of
    its limits at both ends.
    """
    x_lo, x_hi = window
    if x_hi <= x_lo:
        raise InvalidInputError(f"empty window {window}")
    i_left = int(round(x_lo / dx))
    n = int(round((x_hi - x_lo) / dx)) + 1
    x = (i_left + np.arange(n)) * dx
    u = p.sample(x - shift)
    if u[0] < 1.0 - edge_tol_left:
        raise WindowTooNarrowError(
            f"left edge value {u[0]:.3e} below 1 - {edge_tol_left:g}")
    if u[-1] > edge_tol_right:
        raise WindowTooNarrowError(
            f"right edge value {u[-1]:.3e} above {edge_tol_right:g}")
    return FieldState(float(t0), i_left, dx, u)


def _banded_matrix(diag: np.ndarray, off_lo: np.ndarray, off_hi: np.ndarray):
    n = diag.size
    ab = np.zeros((3, n))
    ab[0, 1:] = off_hi[:-1]
    ab[1, :] = diag
    ab[2, :-1] = off_lo[1:]
    return ab


def _diffusion_coeffs(a_half: np.ndarray, dx: float, boundary: str):
    """Conservative (a u_x)_x stencil: L u = [aE (uE - u) - aW (u - uW)] / dx^2."""
    n = a_half.size + 1
    aW = np.empty(n)
    aE = np.empty(n)
    aW[1:] = a_half
    aE[:-1] = a_half
    if boundary == BC_NEUMANN:
        aW[0] = 0.0
        aE[-1] = 0.0
    else:
        aW[0] = a_half[0]
        aE[-1] = a_half[-1]
    return aW, aE


def _advance(u: np.ndarray, x: np.ndarray, t: float, dt: float, dx: float,
             rate_fn, a_half: np.ndarray, scheme: str, boundary: str,
             edge_rho: float | None = None, edge_period: int | None = None):
    """One IMEX step; returns (u_new, overshoot_before_clamp).

    With the decay boundary the right edge node is slaved into the tail:
    u[n-1] = rho * u[n-2] in a homogeneous medium (rho = exp(-lam dx)), or
    u[n-1] = rho^P * u[n-1-P] across one period of P cells in an x-periodic
    one, where the per-period ratio of a pulsating tail is exactly
    exp(-lam L) regardless of the modulation. Either way the exponential
    tail continues past the window instead of being cut to 0; a hard cut
    steepens the decay and eventually drags the front back to the minimal
    speed of the active medium.
    """
    r = dt / dx ** 2
    aW, aE = _diffusion_coeffs(a_half, dx, boundary)
    pinned = boundary in (BC_DIRICHLET, BC_DECAY)
    decay = boundary == BC_DECAY

    def pin(v):
        if pinned:
            v[0] = 1.0
            if boundary == BC_DIRICHLET:
                v[-1] = 0.0
            elif edge_period:
                v[-1] = v[-1 - edge_period] * edge_rho ** edge_period
            else:
                v[-1] = v[-2] * edge_rho
        return v

    def implicit_solve(rhs, theta):
        diag = 1.0 + theta * r * (aW + aE)
        lo = -theta * r * aW
        hi = -theta * r * aE
        if pinned:
            diag[0] = 1.0
            hi[0] = 0.0
            diag[-1] = 1.0
            lo[-1] = -edge_rho if (decay and not edge_period) else 0.0
            rhs = rhs.copy()
            rhs[-1] = 0.0 if decay else rhs[-1]
        ab = _banded_matrix(diag, lo, hi)
        try:
            y = solve_banded((1, 1), ab, rhs)
            if decay and edge_period:
                # rank-1 correction folds the one-period-back constraint
                # u[n-1] = rho^P u[n-1-P] into the tridiagonal solve
                e = np.zeros_like(rhs)
                e[-1] = 1.0
                z = solve_banded((1, 1), ab, e)
                r_l = edge_rho ** edge_period
                j = rhs.size - 1 - edge_period
                y = y + z * (r_l * y[j]) / (1.0 - r_l * z[j])
            return y
        except ValueError as exc:
            raise BlowUpError(
                f"non-finite values entered the implicit solve at t={t:.6g}: "
                f"{exc}") from exc

    def explicit_diffusion(v, theta):
        w = v.copy()
        w[1:-1] = v[1:-1] + theta * r * (
            aE[1:-1] * (v[2:] - v[1:-1]) - aW[1:-1] * (v[1:-1] - v[:-2]))
        if boundary == BC_NEUMANN:
            w[0] = v[0] + theta * r * aE[0] * (v[1] - v[0])
            w[-1] = v[-1] - theta * r * aW[-1] * (v[-1] - v[-2])
        return w

    def rate(tt, v):
        return rate_fn(tt, np.clip(v, 0.0, 1.0), x)

    if scheme == SCHEME_BE:
        v = pin(u + dt * rate(t, u))
        w = implicit_solve(v, 1.0)
    else:
        # Strang: explicit-midpoint reaction half-steps around CN diffusion
        mid = u + (dt / 4.0) * rate(t, u)
        v = pin(u + (dt / 2.0) * rate(t + dt / 4.0, mid))
        w = implicit_solve(explicit_diffusion(v, 0.5), 0.5)
        mid = w + (dt / 4.0) * rate(t + dt / 2.0, w)
        w = w + (dt / 2.0) * rate(t + 3.0 * dt / 4.0, mid)
        pin(w)
    if not np.all(np.isfinite(w)):
        bad = int(np.argmax(~np.isfinite(w)))
        raise BlowUpError(f"non-finite value at t={t + dt:.6g}, x={x[bad]:.6g}")
    overshoot = max(float(w.max() - 1.0), float(-w.min()), 0.0)
    w = np.clip(w, -CLIP_BAND, 1.0 + CLIP_BAND)
    w = np.clip(w, 0.0, 1.0)
    return w, overshoot


def step(state: FieldState, r: ReactionTerm, cfg: SolverConfig,
         dt: float | None = None) -> FieldState:
    """Advance one time step (homogeneous medium)."""
    if dt is None:
        dt = cfg.resolve_dt(r.lipschitz_bound())
    a_half = np.ones(state.u.size - 1)
    rate = lambda t, uc, x: r.rate(t, uc)
    rho = None
    if cfg.boundary == BC_DECAY:
        rho = float(np.exp(-_fit_fill_lambda(state.x, state.u) * state.dx))
    u, _ = _advance(state.u, state.x, state.t, dt, cfg.dx, rate, a_half,
                    cfg.scheme, cfg.boundary, rho)
    return FieldState(state.t + dt, state.i_left, state.dx, u)


def _fit_fill_lambda(x: np.ndarray, u: np.ndarray) -> float:
    """Decay rate of the live right tail, for filling cells entering the window."""
    mask = (u > 1e-12) & (u < 1e-3)
    if mask.sum() < 4:
        return 1.0
    xi, yi = x[mask], np.log(u[mask])
    lam = -np.polyfit(xi, yi, 1)[0]
    return float(min(max(lam, 1e-3), 60.0))


def _shift_window(state: FieldState, cells: int, fill_lambda: float,
                  period_cells: int | None = None) -> None:
    """Shift the window by whole cells in place.

    Cells entering on the right continue the tail: by the fitted exponential
    in a homogeneous medium, or by tiling the last stored period scaled with
    the measured per-period ratio in an x-periodic one (a pure-exponential
    fill would erase the periodic modulation of the tail and keep injecting
    noise at every shift).
    """
    n = state.u.size
    if cells > 0:
        kept = state.u[cells:]
        if (period_cells and kept.size > 2 * period_cells
                and kept[-1 - period_cells] > 1e-280 and kept[-1] > 0.0):
            ratio = kept[-1] / kept[-1 - period_cells]
            buf = np.concatenate([kept[-period_cells:],
                                  np.zeros(cells)])
            blocks = int(np.ceil(cells / period_cells))
            for m in range(blocks):
                lo = period_cells + m * period_cells
                hi = min(lo + period_cells, period_cells + cells)
                src = buf[lo - period_cells: hi - period_cells]
                buf[lo:hi] = src * ratio
            tail = buf[period_cells: period_cells + cells]
        else:
            edge = kept[-1]
            tail = edge * np.exp(-fill_lambda * state.dx
                                 * np.arange(1, cells + 1))
        tail[tail < 1e-300] = 0.0
        state.u = np.concatenate([kept, tail])
    else:
        kept = state.u[:cells]
        state.u = np.concatenate([np.ones(-cells), kept])
    state.i_left += cells
    assert state.u.size == n


def _run(state: FieldState, rate_fn, lipschitz: float, t_end: float,
         cfg: SolverConfig, a_of_x, observers, require_front: bool,
         meta: dict, period_cells: int | None = None) -> Trajectory:
    if t_end <= state.t:
        raise InvalidInputError(f"t_end = {t_end} not after start {state.t}")
    dt = cfg.resolve_dt(lipschitz)
    n_steps = int(np.ceil((t_end - state.t) / dt - 1e-12))
    state = state.copy()
    track = InterfaceTrack(cfg.follow_level)
    traj = Trajectory(track=track, meta=meta)
    traj.meta.setdefault("dt", dt)
    traj.meta.setdefault("dx", cfg.dx)
    traj.meta.setdefault("scheme", cfg.scheme)

    def a_half_for(st: FieldState) -> np.ndarray:
        if a_of_x is None:
            return np.ones(st.u.size - 1)
        return np.asarray(a_of_x(st.x[:-1] + 0.5 * st.dx), dtype=float)

    a_half = a_half_for(state)
    w_left = cfg.window_left
    w_right = cfg.window_right if cfg.window_right is not None else 150.0
    lam_fill = meta.get("lambda1c") or _fit_fill_lambda(state.x, state.u)
    edge_rho = (float(np.exp(-lam_fill * cfg.dx))
                if cfg.boundary == BC_DECAY else None)

    def record(st: FieldState, step_idx: int):
        xs = _down_crossings(st.x, st.u, cfg.follow_level)
        if xs.size == 0:
            if require_front:
                raise FrontLostError(
                    f"level {cfg.follow_level} lost at t = {st.t:.6g}")
            return None
        wl, wr = st.window
        track.append(st.t, float(xs[-1]), xs.size, wl, wr)
        return float(xs[-1])

    def snap(st: FieldState):
        s = st.copy()
        traj.snapshots.append(s)
        for ob in observers:
            ob(s)

    record(state, 0)
    snap(state)
    for k in range(n_steps):
        u, overshoot = _advance(state.u, state.x, state.t, dt, cfg.dx,
                                rate_fn, a_half, cfg.scheme, cfg.boundary,
                                edge_rho, period_cells)
        state.u = u
        state.t += dt
        if overshoot > 0.0:
            traj.clip_count += 1
            traj.max_overshoot = max(traj.max_overshoot, overshoot)
        x_lvl = record(state, k + 1)
        if (cfg.window_policy == POLICY_FOLLOW and x_lvl is not None):
            anchor = state.window[0] + w_left
            drift = x_lvl - anchor
            if abs(drift) > 0.25 * min(w_left, w_right):
                cells = int(round(drift / cfg.dx))
                if period_cells:
                    # whole-period shifts keep the medium phase of every
                    # node, including the slaved edge, unchanged
                    cells = int(round(cells / period_cells)) * period_cells
                if cells != 0:
                    lam_fill = _fit_fill_lambda(state.x, state.u)
                    _shift_window(state, cells, lam_fill, period_cells)
                    a_half = a_half_for(state)
                    if cfg.boundary == BC_DECAY:
                        edge_rho = float(np.exp(-lam_fill * cfg.dx))
                    traj.events.append({
                        "step": k + 1, "t": state.t, "shift_cells": cells,
                        "fill_lambda": lam_fill,
                        "window": list(state.window)})
        if (k + 1) % cfg.snapshot_stride == 0 or k == n_steps - 1:
            snap(state)
    return traj


def evolve(state: FieldState, r: ReactionTerm, t_end: float,
           cfg: SolverConfig, observers=(), require_front: bool = True) -> Trajectory:
    """Advance to t_end, tracking the follow level and shifting the window.

    Observers are called with each stored snapshot. With require_front the
    run aborts (FrontLostError) if the follow level is no longer crossed.
    """
    rate = lambda t, uc, x: r.rate(t, uc)
    meta = {"reaction": r, "kind": "homogeneous"}
    return _run(state, rate, r.lipschitz_bound(), t_end, cfg, None,
                observers, require_front, meta)


def evolve_periodic(state: FieldState, a, f, L: float, t_end: float,
                    cfg: SolverConfig, observers=(),
                    require_front: bool = True) -> Trajectory:
    """Variant with L-periodic diffusivity a(x) and reaction f(x, u).

    Uses the conservative discretization of (a(x) u_x)_x; coefficients are
    evaluated at absolute positions, so whole-cell window shifts keep the
    medium phase exact when dx divides L.
    """
    a_fn = (lambda x: np.ones_like(x)) if a is None else a
    probe = a_fn(np.linspace(0.0, L, 257))
    if np.any(probe <= 0.0):
        raise InvalidInputError("diffusivity a(x) must be strictly positive")
    cells = L / cfg.dx
    if abs(cells - round(cells)) > 1e-9:
        raise InvalidInputError(
            f"dx = {cfg.dx} must divide the period L = {L} so window shifts "
            "preserve the medium phase")
    xs = np.linspace(0.0, L, 65)
    ss = np.linspace(0.0, 1.0, 401)
    lip = max(float(np.abs(np.diff(f(xv, ss))).max() / (ss[1] - ss[0]))
              for xv in xs)
    rate = lambda t, uc, x: f(x, uc)
    meta = {"kind": "periodic", "period": L}
    return _run(state, rate, lip, t_end, cfg, a_fn, observers,
                require_front, meta, period_cells=int(round(cells)))


def trajectory_from_function(u_fn, times, window: tuple[float, float],
                             dx: float = 0.05, level: float = 0.5) -> Trajectory:
    """Build a synthetic trajectory from a callable u(t, x) on a fixed window.

    Used to feed analytic counterexamples (e.g. uniformly flattening
    solutions) through the same analysis pipeline as solver output.
    """
    i_left = int(round(window[0] / dx))
    n = int(round((window[1] - window[0]) / dx)) + 1
    x = (i_left + np.arange(n)) * dx
    track = InterfaceTrack(level)
    traj = Trajectory(track=track, meta={"kind": "synthetic"})
    for t in times:
        u = np.asarray(u_fn(t, x), dtype=float)
        st = FieldState(float(t), i_left, dx, u)
        traj.snapshots.append(st)
        xs = _down_crossings(x, u, level)
        if xs.size:
            track.append(float(t), float(xs[-1]), xs.size, *st.window)
    return traj
