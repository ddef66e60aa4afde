"""Reaction nonlinearities, including the time-switched family.

A medium is described by a :class:`ReactionTerm`: either a single
nonlinearity f(s) that never changes, or a pair (f1, f2) with switch
times t1 < t2. Before t1 the rate is f1, after t2 it is f2, and on the
gap (t1, t2) the rate is a convex blend w(t) f1 + (1 - w(t)) f2 chosen
so that nonnegativity and the fixed points at s = 0 and s = 1 are
preserved for every t.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    ConstructionError,
    DegenerateDerivativeError,
    InvalidInputError,
    UnresolvedDerivativeError,
)

CLIP_BAND = 1e-8  # solver overshoot tolerated outside [0, 1] before clamping

BLEND_LINEAR = "linear"
BLEND_SMOOTHSTEP = "smoothstep"
BLEND_HOLD_F1 = "hold-f1"
_BLENDS = (BLEND_LINEAR, BLEND_SMOOTHSTEP, BLEND_HOLD_F1)


@dataclass(frozen=True)
class Nonlinearity:
    """A scalar rate function s in [0,1] -> f(s) with metadata.

    Attributes
    ----------
    name : str
        Family name ("logistic", "kpp-power", "bistable", "capped-tent-hump",
        "tabulated").
    fn : callable
        Vectorized evaluation; callers must pass s already in [0, 1].
    params : tuple
        Family parameters, for reporting and serialization.
    dfdz : float or None
        Analytic f'(0) when the family provides it.
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    params: tuple = ()
    dfdz: float | None = None

    def __call__(self, s):
        return self.fn(np.asarray(s, dtype=float))


def logistic(rate: float = 1.0) -> Nonlinearity:
    """f(s) = rate * s * (1 - s); f'(0) = rate."""
    return Nonlinearity("logistic", lambda s: rate * s * (1.0 - s),
                        (rate,), float(rate))


def kpp_power(a: float, rate: float = 1.0) -> Nonlinearity:
    """f(s) = rate * s * (1 - s) * (1 + a s); stays below f'(0) s only for a <= 1."""
    if a > 1.0:
        raise ConstructionError(f"kpp_power requires a <= 1 (got a={a}); "
                                "larger a breaks f(s) <= f'(0) s")
    return Nonlinearity("kpp-power",
                        lambda s: rate * s * (1.0 - s) * (1.0 + a * s),
                        (a, rate), float(rate))


def bistable(a: float) -> Nonlinearity:
    """f(s) = s (1 - s) (s - a), 0 < a < 1/2; f'(0) = -a < 0.

    Negative near 0, so it is only valid for profile-solver oracle tests,
    not for spreading experiments.
    """
    if not 0.0 < a < 0.5:
        raise ConstructionError(f"bistable threshold must lie in (0, 1/2), got {a}")
    return Nonlinearity("bistable", lambda s: s * (1.0 - s) * (s - a),
                        (a,), -float(a))


def _capped_tent(z: np.ndarray, cap: float) -> np.ndarray:
    # C1 version of the tent 1 - |z| on [-1, 1]: a parabolic cap at the apex
    # and cubic feet that keep value and slope continuous while flattening
    # the derivative to 0 at |z| = 1.
    az = np.abs(z)
    apex = 1.0 - cap / 2.0 - z * z / (2.0 * cap)
    v = 1.0 - az
    foot = v * v * (2.0 * cap - v) / (cap * cap)
    mid = v
    out = np.where(az <= cap, apex, np.where(az >= 1.0 - cap, foot, mid))
    return np.where(az >= 1.0, 0.0, out)


def hump(fprime0: float, bump_mass: float, eps: float, cap: float = 0.2) -> Nonlinearity:
    """Logistic base plus a tall C1 bump of height ~bump_mass/eps near s = 1 - eps.

    The bump dominates a slightly shrunken tent of area bump_mass supported
    on [1 - 2 eps, 1], which pushes the minimal front speed well above the
    KPP floor 2 sqrt(f'(0)) while keeping f > 0 on (0, 1) and f(0) = f(1) = 0.
    """
    if not 0.0 < eps < 0.25:
        raise ConstructionError(f"hump width eps must lie in (0, 0.25), got {eps}")
    if fprime0 <= 0.0:
        raise ConstructionError("hump base requires f'(0) > 0")
    scale = bump_mass / eps

    def fn(s):
        z = (s - (1.0 - eps)) / eps
        return fprime0 * s * (1.0 - s) + scale * _capped_tent(z, cap)

    return Nonlinearity("capped-tent-hump", fn, (fprime0, bump_mass, eps, cap),
                        float(fprime0))


def tabulated(s_vals, f_vals, name: str = "tabulated") -> Nonlinearity:
    """Linear interpolation through sampled (s, f(s)) pairs.

    Endpoints at s = 0 and s = 1 are pinned to 0 if absent.
    """
    s = np.asarray(s_vals, dtype=float)
    f = np.asarray(f_vals, dtype=float)
    if s.ndim != 1 or s.shape != f.shape or s.size < 2:
        raise InvalidInputError("tabulated spec needs matching 1D s and f arrays")
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(f))):
        raise InvalidInputError("tabulated spec contains non-finite samples")
    order = np.argsort(s)
    s, f = s[order], f[order]
    if s[0] > 0.0:
        s = np.concatenate([[0.0], s])
        f = np.concatenate([[0.0], f])
    if s[-1] < 1.0:
        s = np.concatenate([s, [1.0]])
        f = np.concatenate([f, [0.0]])
    return Nonlinearity(name, lambda q: np.interp(q, s, f), (s, f), None)


def from_table_file(path) -> Nonlinearity:
    """Load a two-column text file (s, f(s))."""
    data = np.loadtxt(path)
    if data.ndim != 2 or data.shape[1] != 2:
        raise InvalidInputError(f"{path}: expected two columns (s, f)")
    return tabulated(data[:, 0], data[:, 1], name=f"tabulated:{path}")


def derivative_at_zero(nl: Nonlinearity, h0: float = 1e-2,
                       levels: int = 8) -> tuple[float, float]:
    """Return (f'(0), error estimate).

    Uses the analytic value when the family carries one, otherwise a
    one-sided difference f(h)/h refined by Richardson extrapolation.
    """
    if nl.dfdz is not None:
        return float(nl.dfdz), 0.0
    hs = h0 / (2.0 ** np.arange(levels))
    if nl.name.startswith("tabulated"):
        s = nl.params[0]
        positive = s[s > 0.0]
        if positive.size == 0 or positive.min() > 0.02:
            raise UnresolvedDerivativeError(
                f"{nl.name}: no samples near s = 0 (first knot at "
                f"{positive.min() if positive.size else 'n/a'})")
        # knot-aligned stencil: below the first knot the interpolant is a
        # fixed chord, which would floor the halving sequence
        s1 = float(positive.min())
        levels = min(levels, max(int(np.floor(np.log2(0.05 / s1))), 2) + 1)
        hs = s1 * 2.0 ** np.arange(levels - 1, -1, -1)
    d = np.array([float(nl(np.array([h]))[0]) / h for h in hs])
    # Richardson table for a first-order one-sided difference
    table = [d]
    for k in range(1, levels):
        prev = table[-1]
        fac = 2.0 ** k
        table.append((fac * prev[1:] - prev[:-1]) / (fac - 1.0))
    best = table[-1][-1] if table[-1].size else table[-2][-1]
    err = abs(best - table[-2][-1])
    return float(best), float(err)


def derivative_at_one(nl: Nonlinearity, h0: float = 1e-2,
                      levels: int = 8) -> float:
    """One-sided f'(1) from the left, Richardson refined (used by the shooter)."""
    hs = h0 / (2.0 ** np.arange(levels))
    d = np.array([-float(nl(np.array([1.0 - h]))[0]) / h for h in hs])
    table = [d]
    for k in range(1, levels):
        prev = table[-1]
        fac = 2.0 ** k
        table.append((fac * prev[1:] - prev[:-1]) / (fac - 1.0))
    return float(table[-1][-1] if table[-1].size else table[-2][-1])


@dataclass(frozen=True)
class KppCheck:
    """Result of the sub-tangency test f(s) <= f'(0) s on (0, 1)."""
    ok: bool
    max_violation: float
    arg_max: float


@dataclass(frozen=True)
class ReactionTerm:
    """Reaction rate f(t, s); time-independent or time-switched.

    For the switched kind the rate equals f1 for t <= t1 and f2 for
    t >= t2; inside the gap it is w(t) f1 + (1 - w(t)) f2 with a linear
    or smoothstep weight, or f1 held until t2 ("hold-f1").
    """

    f1: Nonlinearity
    f2: Nonlinearity | None = None
    t1: float = 0.0
    t2: float = 0.0
    blend: str = BLEND_SMOOTHSTEP

    def __post_init__(self):
        if self.f2 is not None:
            if not self.t1 < self.t2:
                raise InvalidInputError(
                    f"switch times must satisfy t1 < t2 (got {self.t1}, {self.t2})")
            if self.blend not in _BLENDS:
                raise InvalidInputError(
                    f"unknown blend {self.blend!r}; expected one of {_BLENDS}")

    @property
    def time_switched(self) -> bool:
        return self.f2 is not None

    def weight(self, t: float) -> float:
        """Weight of f1 at time t (1 before the switch, 0 after)."""
        if not self.time_switched or t <= self.t1:
            return 1.0
        if t >= self.t2:
            return 0.0
        if self.blend == BLEND_HOLD_F1:
            return 1.0
        theta = (t - self.t1) / (self.t2 - self.t1)
        if self.blend == BLEND_LINEAR:
            return 1.0 - theta
        return 1.0 - (3.0 * theta * theta - 2.0 * theta ** 3)

    def rate(self, t: float, s) -> np.ndarray:
        """Evaluate f(t, clamp(s, 0, 1)) for scalar or array s."""
        if not np.isfinite(t):
            raise InvalidInputError(f"non-finite time {t}")
        s = np.asarray(s, dtype=float)
        if not np.all(np.isfinite(s)):
            raise InvalidInputError("non-finite state passed to reaction rate")
        sc = np.clip(s, 0.0, 1.0)
        w = self.weight(t)
        if w == 1.0:
            return self.f1(sc)
        if w == 0.0:
            return self.f2(sc)
        return w * self.f1(sc) + (1.0 - w) * self.f2(sc)

    def branch(self, which: str) -> Nonlinearity:
        if which == "f1":
            return self.f1
        if which == "f2":
            if self.f2 is None:
                raise InvalidInputError("reaction term has no f2 branch")
            return self.f2
        raise InvalidInputError(f"branch must be 'f1' or 'f2', got {which!r}")

    def derivative_at_zero(self, which: str) -> float:
        """f'(0) of the selected branch (analytic when available)."""
        value, _ = derivative_at_zero(self.branch(which))
        return value

    def is_kpp(self, which: str, grid_resolution: int = 2001,
               tol: float = 1e-10) -> KppCheck:
        """Check f(s) <= f'(0) s + tol on a sample grid.

        Raises DegenerateDerivativeError when f'(0) <= 0, since the
        sub-tangency test is meaningless without a positive linear rate.
        """
        nl = self.branch(which)
        fp0, fp0_err = derivative_at_zero(nl)
        if fp0 <= max(tol, 4.0 * fp0_err):
            raise DegenerateDerivativeError(
                f"{nl.name}: f'(0) = {fp0:g} (err {fp0_err:g}) is not "
                "positively resolved")
        s = np.linspace(0.0, 1.0, grid_resolution)
        gap = nl(s) - fp0 * s
        i = int(np.argmax(gap))
        return KppCheck(bool(gap[i] <= tol), float(max(gap[i], 0.0)), float(s[i]))

    def sup_ratio(self, n_t: int = 401, n_s: int = 401) -> float:
        """Grid maximum of f(t, s)/s over [t1, t2] x (0, 1].

        The s -> 0 limit candidates w(t) f1'(0) + (1 - w(t)) f2'(0) are
        included for each grid time, so the supremum is not missed when
        it sits on the s = 0 edge.
        """
        if not self.time_switched:
            raise InvalidInputError("sup_ratio requires a time-switched term")
        ts = np.linspace(self.t1, self.t2, n_t)
        ss = np.linspace(0.0, 1.0, n_s + 1)[1:]  # (0, 1]
        fp1 = self.derivative_at_zero("f1")
        fp2 = self.derivative_at_zero("f2")
        best = 0.0
        for t in ts:
            w = self.weight(t)
            ratios = self.rate(t, ss) / ss
            best = max(best, float(ratios.max()), w * fp1 + (1.0 - w) * fp2)
        return best

    def lipschitz_bound(self, n_t: int = 33, n_s: int = 801) -> float:
        """Upper estimate of sup |df/ds| over the active time range and s in [0,1]."""
        if self.time_switched:
            ts = np.linspace(self.t1, self.t2, n_t)
        else:
            ts = np.array([self.t1])
        ss = np.linspace(0.0, 1.0, n_s)
        best = 0.0
        for t in ts:
            f = self.rate(t, ss)
            best = max(best, float(np.abs(np.diff(f)).max() / (ss[1] - ss[0])))
        return best

    def describe(self) -> dict:
        """JSON-friendly summary for reports."""
        def one(nl):
            params = tuple(p for p in nl.params if np.isscalar(p))
            return {"family": nl.name, "params": list(params)}
        d = {"kind": "time-switched" if self.time_switched else "time-independent",
             "f1": one(self.f1)}
        if self.time_switched:
            d.update({"f2": one(self.f2), "t1": self.t1, "t2": self.t2,
                      "blend": self.blend})
        return d


def time_independent(nl: Nonlinearity) -> ReactionTerm:
    return ReactionTerm(f1=nl)


def time_switched(f1: Nonlinearity, f2: Nonlinearity, t1: float, t2: float,
                  blend: str = BLEND_SMOOTHSTEP) -> ReactionTerm:
    return ReactionTerm(f1=f1, f2=f2, t1=float(t1), t2=float(t2), blend=blend)
