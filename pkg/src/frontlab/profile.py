"""Traveling-wave profiles: phi'' + c phi' + f(phi) = 0, phi(-inf)=1, phi(+inf)=0.

The solver shoots along the unstable manifold of the rest state (1, 0),
which is the numerically stable direction; the approach to (0, 0) is then
classified in the phase plane. A speed c admits a monotone front exactly
when the shot trajectory decays into the origin without crossing zero and
without its logarithmic slope phi'/phi diving below the fast linear rate
-- subminimal speeds reveal themselves either by an outright sign change
or by that dive, which precedes the (possibly unresolvably small) sign
change of a slow spiral.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import (
    BracketFailureError,
    ConvergenceFailureError,
    InvalidInputError,
    InvalidWindowError,
    NoMonotoneFrontError,
)
from .reaction import Nonlinearity, derivative_at_one, derivative_at_zero

PHI_FLOOR = 1e-6        # admissibility / storage floor for the tail
_GATE = 1e-4            # hand-off from the nonlinear transit to tail analysis
_DEEP = 1e-45           # depth to which a clean tail must be followed
_DEEP_SADDLE = 1e-8     # shallower floor when 0 is a saddle (bistable f)


def decay_exponent(fprime0: float, cstar: float, c: float,
                   tol: float = 1e-9) -> float:
    """Tail exponent of the front at +infinity.

    For c > cstar this is the slow root (c - sqrt(c^2 - 4 f'(0)))/2 of
    lambda^2 - c lambda + f'(0) = 0; at c = cstar the profile decays at
    the fast root (cstar + sqrt(cstar^2 - 4 f'(0)))/2 instead. Called
    with c = cstar and f'(0) of the second medium it yields the critical
    slow rate lambda_minus used by the speed-transition law.
    """
    if not all(np.isfinite(v) for v in (fprime0, cstar, c)):
        raise InvalidInputError("non-finite input to decay_exponent")
    if c < cstar - tol:
        raise InvalidInputError(f"speed c={c} below minimal speed {cstar}")
    if c <= cstar + tol:
        disc = cstar * cstar - 4.0 * fprime0
        if disc < -tol:
            raise InvalidInputError(
                f"inconsistent inputs: cstar^2 = {cstar**2:g} < 4 f'(0) = {4*fprime0:g}")
        return (cstar + np.sqrt(max(disc, 0.0))) / 2.0
    disc = c * c - 4.0 * fprime0
    if disc < -tol:
        raise InvalidInputError(
            f"inconsistent inputs: c^2 = {c*c:g} < 4 f'(0) = {4*fprime0:g}")
    return (c - np.sqrt(max(disc, 0.0))) / 2.0


@dataclass(frozen=True)
class ShotResult:
    admissible: bool
    reason: str
    sol_transit: object            # dense solution, xi in [0, xi_gate]
    sol_tail: object | None        # dense solution past the gate
    xi_gate: float | None
    xi_floor: float | None         # first crossing of PHI_FLOOR


def _shoot(f, fprime0: float, fprime1: float, c: float, *,
           delta: float = 1e-8, rtol: float = 1e-10,
           span: float = 4000.0) -> ShotResult:
    """Integrate from near (1, 0) and classify the approach to the origin."""
    disc1 = c * c - 4.0 * fprime1
    mu = (-c + np.sqrt(disc1)) / 2.0  # unstable rate at (1, 0); fprime1 < 0
    if not np.isfinite(mu) or mu <= 0.0:
        raise ConvergenceFailureError(
            f"rest state at 1 is not a saddle (f'(1)={fprime1:g}); cannot shoot")
    y0 = [1.0 - delta, -delta * mu]

    def rhs(xi, y):
        return (y[1], -c * y[1] - float(f(y[0])))

    def ev_gate(xi, y):
        return y[0] - _GATE
    ev_gate.terminal = True
    ev_gate.direction = -1

    def ev_turn(xi, y):
        return y[1]
    ev_turn.terminal = True
    ev_turn.direction = 1

    sol_a = solve_ivp(rhs, (0.0, span), y0, events=[ev_gate, ev_turn],
                      rtol=rtol, atol=1e-14, max_step=2.0, dense_output=True)
    if len(sol_a.t_events[1]):
        phi_turn = sol_a.y_events[1][0][0]
        return ShotResult(False, f"turned-up-at-phi={phi_turn:.3e}",
                          sol_a, None, None, None)
    if not len(sol_a.t_events[0]):
        raise ConvergenceFailureError(
            f"shot did not leave the rest state within xi-span {span} at c={c}")
    xi_gate = float(sol_a.t_events[0][0])
    y_gate = sol_a.y_events[0][0]

    # Tail phase. k bounds the admissible logarithmic decay: the fast rate of
    # the linearization at 0 (a node or, for f'(0) < 0, a saddle) plus margin.
    disc0 = c * c - 4.0 * fprime0
    lam_fast = (c + np.sqrt(max(disc0, 0.0))) / 2.0
    lam_slow = (c - np.sqrt(disc0)) / 2.0 if (disc0 > 0.0 and fprime0 > 0.0) else 0.5 * c
    k = lam_fast + max(0.05, 0.02 * c)
    deep = _DEEP_SADDLE if fprime0 <= 0.0 else _DEEP
    span_b = min(8000.0, 1.5 * np.log(_GATE / deep) / max(lam_slow, 1e-3) + 100.0)

    if y_gate[1] + k * y_gate[0] <= 0.0:
        return ShotResult(False, "log-slope-dive-at-gate", sol_a, None,
                          xi_gate, None)

    def ev_neg(xi, y):
        return y[0]
    ev_neg.terminal = True
    ev_neg.direction = -1

    def ev_dive(xi, y):
        return y[1] + k * y[0]
    ev_dive.terminal = True
    ev_dive.direction = -1

    def ev_deep(xi, y):
        return y[0] - deep
    ev_deep.terminal = True
    ev_deep.direction = -1

    def ev_floor(xi, y):
        return y[0] - PHI_FLOOR
    ev_floor.terminal = False
    ev_floor.direction = -1

    sol_b = solve_ivp(rhs, (xi_gate, xi_gate + span_b), y_gate,
                      events=[ev_neg, ev_dive, ev_deep, ev_floor],
                      rtol=rtol, atol=1e-60, dense_output=True)
    xi_floor = float(sol_b.t_events[3][0]) if len(sol_b.t_events[3]) else None
    if len(sol_b.t_events[0]):
        return ShotResult(False, "went-negative", sol_a, sol_b, xi_gate, xi_floor)
    if len(sol_b.t_events[1]):
        phi_dive = sol_b.y_events[1][0][0]
        return ShotResult(False, f"log-slope-dive-at-phi={phi_dive:.3e}",
                          sol_a, sol_b, xi_gate, xi_floor)
    reason = "clean-tail" if len(sol_b.t_events[2]) else "span-capped"
    return ShotResult(True, reason, sol_a, sol_b, xi_gate, xi_floor)


@dataclass(frozen=True)
class TailFit:
    """Log-linear fit phi ~ A exp(-lam xi) over a tail window."""
    lam: float
    amplitude: float
    r2: float
    degenerate: bool          # systematic bow: linear-in-xi prefactor suspected
    curvature_stat: float     # t-statistic of the quadratic term
    window: tuple[float, float]


def _fit_log_tail(xi: np.ndarray, phi: np.ndarray,
                  window: tuple[float, float]) -> TailFit:
    lo, hi = window
    mask = (xi >= lo) & (xi <= hi)
    if mask.sum() < 8:
        raise InvalidWindowError(f"tail window {window} holds only {mask.sum()} nodes")
    if np.any(phi[mask] <= 0.0):
        raise InvalidWindowError("tail window contains non-positive phi values")
    x = xi[mask]
    y = np.log(phi[mask])
    xc = x - x.mean()
    design = np.column_stack([np.ones_like(xc), xc])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    fit = design @ coef
    resid = y - fit
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    lam = -coef[1]
    amplitude = float(np.exp(coef[0] + lam * x.mean()))

    # quadratic term against the linear-fit noise; require both statistical
    # significance and a practically visible bow in log units
    design3 = np.column_stack([np.ones_like(xc), xc, xc * xc])
    coef3, *_ = np.linalg.lstsq(design3, y, rcond=None)
    resid3 = y - design3 @ coef3
    dof = max(len(y) - 3, 1)
    sigma2 = float((resid3 ** 2).sum()) / dof
    cov = sigma2 * np.linalg.inv(design3.T @ design3)
    se = np.sqrt(max(cov[2, 2], 1e-300))
    tstat = abs(coef3[2]) / se
    bow = abs(coef3[2]) * (0.5 * (hi - lo)) ** 2
    degenerate = bool(tstat > 3.0 and bow > 3e-3)
    return TailFit(float(lam), amplitude, float(r2), degenerate,
                   float(tstat), (float(lo), float(hi)))


@dataclass
class FrontProfile:
    """Monotone wave profile on a uniform grid, normalized so phi(0) = 1/2."""

    c: float
    grid: np.ndarray
    phi: np.ndarray
    fprime0: float
    tail: TailFit
    mu_left: float  # growth rate of 1 - phi as xi -> -inf

    @property
    def fitted_lambda(self) -> float:
        return self.tail.lam

    @property
    def fitted_amplitude(self) -> float:
        return self.tail.amplitude

    def sample(self, z) -> np.ndarray:
        """Evaluate phi at arbitrary positions.

        Inside the stored grid: linear interpolation. Beyond the right end:
        the fitted exponential tail. Beyond the left end: exponential
        relaxation of 1 - phi at the linearized rate.
        """
        z = np.asarray(z, dtype=float)
        out = np.interp(z, self.grid, self.phi)
        left = z < self.grid[0]
        if np.any(left):
            gap0 = 1.0 - self.phi[0]
            out[left] = 1.0 - gap0 * np.exp(self.mu_left * (z[left] - self.grid[0]))
        right = z > self.grid[-1]
        if np.any(right):
            arg = -self.tail.lam * (z[right] - self.grid[-1])
            out[right] = self.phi[-1] * np.exp(np.maximum(arg, -700.0))
        return out

    def export_text(self, path) -> None:
        """Two-column text file (xi, phi)."""
        np.savetxt(path, np.column_stack([self.grid, self.phi]), fmt="%.17g",
                   header="xi phi")


def solve_profile(nl: Nonlinearity, c: float, tol: float = 1e-3,
                  dxi: float = 0.01) -> FrontProfile:
    """Shoot for the monotone front at speed c and resample it uniformly.

    Raises NoMonotoneFrontError when the trajectory crosses zero or turns
    back up (speed below minimal), and ConvergenceFailureError when the
    integration or the residual check fails.
    """
    fp0, _ = derivative_at_zero(nl)
    fp1 = derivative_at_one(nl)
    # tight integration: the finite-difference residual check amplifies
    # any dense-output interpolation error by 1/dxi^2
    shot = _shoot(nl, fp0, fp1, c, rtol=1e-12)
    if not shot.admissible:
        raise NoMonotoneFrontError(
            f"no monotone front at c={c} for {nl.name}: {shot.reason}")
    if shot.xi_floor is None:
        raise ConvergenceFailureError(
            f"tail never reached the storage floor {PHI_FLOOR} at c={c}")

    def phi_raw(xi):
        xi = np.asarray(xi, dtype=float)
        out = np.empty_like(xi)
        a = xi <= shot.xi_gate
        if np.any(a):
            out[a] = shot.sol_transit.sol(xi[a])[0]
        if np.any(~a):
            out[~a] = shot.sol_tail.sol(xi[~a])[0]
        return out

    xi_half = brentq(lambda xi: float(phi_raw(xi)) - 0.5, 0.0, shot.xi_floor,
                     xtol=1e-12)

    def resample(step):
        m = int(np.floor(xi_half / step))
        p = int(np.floor((shot.xi_floor - xi_half) / step))
        grid = step * np.arange(-m, p + 1)
        phi = phi_raw(grid + xi_half)
        d2 = (phi[2:] - 2.0 * phi[1:-1] + phi[:-2]) / step ** 2
        d1 = (phi[2:] - phi[:-2]) / (2.0 * step)
        resid = float(np.abs(d2 + c * d1 + nl(phi[1:-1])).max())
        return grid, phi, resid

    # sharp transits (tall narrow reaction bumps) need a much finer storage
    # grid to keep the finite-difference residual within tol: the curvature
    # of a height/width ~ M/eps bump scales like M/eps^3
    step = dxi
    grid, phi, resid_max = resample(step)
    for _ in range(4):
        if resid_max <= tol:
            break
        step = max(step / (1.3 * np.sqrt(resid_max / tol)), 2e-5)
        grid, phi, resid_max = resample(step)
    if resid_max > tol:
        raise ConvergenceFailureError(
            f"profile residual {resid_max:.3e} exceeds tol {tol:g} at c={c}")
    if np.any(np.diff(phi) >= 0.0):
        raise ConvergenceFailureError(
            f"resampled profile not strictly decreasing at c={c}")

    tail = fit_tail_arrays(grid, phi)
    mu_left = (-c + np.sqrt(c * c - 4.0 * fp1)) / 2.0
    return FrontProfile(float(c), grid, phi, fp0, tail, mu_left)


def fit_tail(p: FrontProfile, window: tuple[float, float] | None = None) -> TailFit:
    """Fit the exponential tail of a profile over a xi-window.

    The window must lie in the region phi < 0.05; by default the deeper
    half of the stored tail is used, clear of both the crossover out of
    the nonlinear front and the storage floor.
    """
    return fit_tail_arrays(p.grid, p.phi, window)


def fit_tail_arrays(xi: np.ndarray, phi: np.ndarray,
                    window: tuple[float, float] | None = None) -> TailFit:
    if window is None:
        usable = phi < 0.05
        if usable.sum() < 16:
            raise InvalidWindowError("profile stores too little tail to fit")
        lo = xi[usable][0]
        hi = xi[-1]
        lo = lo + 0.35 * (hi - lo)
        hi = lo + 0.9 * (hi - lo)
        window = (float(lo), float(hi))
    else:
        mask = (xi >= window[0]) & (xi <= window[1])
        if np.any(phi[mask] >= 0.05):
            raise InvalidWindowError(
                f"tail window {window} reaches phi >= 0.05")
    return _fit_log_tail(xi, phi, window)


def minimal_speed(nl: Nonlinearity, tol: float = 1e-3,
                  c_max: float | None = None) -> float:
    """Smallest speed admitting a monotone front, by bisection on the shot.

    Requires f(0) = f(1) = 0, f > 0 on (0, 1) and f'(0) > 0. The returned
    value is never below the linear floor 2 sqrt(f'(0)) - tol; for
    sub-tangential (KPP) nonlinearities the floor itself is admissible and
    is returned exactly.
    """
    fp0, _ = derivative_at_zero(nl)
    if fp0 <= 0.0:
        raise InvalidInputError(f"{nl.name}: minimal_speed requires f'(0) > 0")
    ss = np.linspace(0.0, 1.0, 2001)[1:-1]
    if np.any(nl(ss) <= 0.0):
        raise InvalidInputError(f"{nl.name}: minimal_speed requires f > 0 on (0, 1)")
    fp1 = derivative_at_one(nl)

    def admissible(c):
        return _shoot(nl, fp0, fp1, c).admissible

    lo = 2.0 * np.sqrt(fp0)
    if admissible(lo):
        return lo
    if c_max is None:
        c_max = 8.0 * lo
    hi = lo
    while hi < c_max:
        nxt = hi * 1.25
        if admissible(nxt):
            lo, hi = hi, nxt
            break
        hi = nxt
    else:
        raise BracketFailureError(
            f"{nl.name}: no admissible speed found in [{2*np.sqrt(fp0):g}, {c_max:g}]")
    while (hi - lo) / hi > tol:
        mid = 0.5 * (lo + hi)
        if admissible(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
