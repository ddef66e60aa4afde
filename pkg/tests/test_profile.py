import numpy as np
import pytest

from frontlab.errors import (
    InvalidInputError,
    InvalidWindowError,
    NoMonotoneFrontError,
)
from frontlab.profile import (
    decay_exponent,
    fit_tail,
    fit_tail_arrays,
    minimal_speed,
    solve_profile,
)
from frontlab.reaction import bistable, hump, logistic


class TestDecayExponent:
    def test_supercritical_closed_forms(self):
        assert decay_exponent(1.0, 2.0, 2.5) == pytest.approx(0.5, abs=1e-14)
        assert decay_exponent(1.0, 2.0, 3.0) == pytest.approx(
            (3.0 - np.sqrt(5.0)) / 2.0, abs=1e-14)

    def test_critical_plus_branch(self):
        assert decay_exponent(1.0, 2.0, 2.0) == pytest.approx(1.0, abs=1e-9)

    def test_below_minimal_rejected(self):
        with pytest.raises(InvalidInputError):
            decay_exponent(1.0, 2.0, 1.5)

    def test_inconsistent_discriminant_rejected(self):
        with pytest.raises(InvalidInputError):
            decay_exponent(4.0, 2.0, 2.0)  # cstar^2 < 4 f'(0)

    @pytest.mark.parametrize("c", [2.05, 2.3, 2.7, 4.0, 9.0])
    def test_root_identity(self, c):
        lam = decay_exponent(1.0, 2.0, c)
        assert lam * (c - lam) == pytest.approx(1.0, rel=1e-12)

    def test_branch_jump_exists_iff_pushed(self):
        # KPP case: discriminant vanishes at cstar, the limit from above is
        # continuous (square-root rate, so ~1e-3 at offset 1e-6)
        lam_limit = decay_exponent(1.0, 2.0, 2.0 + 1e-6)
        assert abs(lam_limit - decay_exponent(1.0, 2.0, 2.0)) < 2e-3
        # pushed case cstar > 2 sqrt(f'(0)): the two branches differ by a
        # finite jump
        cstar = 3.0
        at_min = decay_exponent(1.0, cstar, cstar)
        just_above = decay_exponent(1.0, cstar, cstar + 1e-6)
        assert at_min == pytest.approx((3.0 + np.sqrt(5.0)) / 2.0, abs=1e-6)
        assert just_above == pytest.approx((3.0 - np.sqrt(5.0)) / 2.0, abs=1e-5)
        assert at_min - just_above > 1.0


class TestSolveProfile:
    def test_bistable_closed_form(self):
        # oracle first: phi = 1/(1 + exp(xi/sqrt2)) solves the equation for
        # f = s(1-s)(s-a), c = (1-2a)/sqrt2; verify by direct substitution
        # using the analytic derivatives of the candidate
        a = 0.25
        c = (1.0 - 2.0 * a) / np.sqrt(2.0)
        xi = np.linspace(-20.0, 20.0, 2001)
        phi = 1.0 / (1.0 + np.exp(xi / np.sqrt(2.0)))
        dphi = -phi * (1.0 - phi) / np.sqrt(2.0)
        d2phi = phi * (1.0 - phi) * (1.0 - 2.0 * phi) / 2.0
        resid = d2phi + c * dphi + phi * (1.0 - phi) * (phi - a)
        assert np.abs(resid).max() < 1e-14

        prof = solve_profile(bistable(a), c)
        exact = 1.0 / (1.0 + np.exp(prof.grid / np.sqrt(2.0)))
        assert np.abs(prof.phi - exact).max() < 1e-4

    def test_logistic_supercritical_tail(self):
        prof = solve_profile(logistic(1.0), 2.5)
        assert abs(prof.tail.lam - 0.5) < 1e-2
        assert not prof.tail.degenerate

    def test_below_minimal_speed_rejected(self):
        with pytest.raises(NoMonotoneFrontError):
            solve_profile(logistic(1.0), 1.0)

    def test_profile_invariants(self):
        prof = solve_profile(logistic(1.0), 2.5)
        assert np.all(np.diff(prof.phi) < 0.0)
        assert np.all(prof.phi > 0.0) and np.all(prof.phi < 1.0)
        assert prof.phi[0] > 1.0 - 1e-6
        assert prof.phi[-1] < 2e-6
        assert np.interp(0.0, prof.grid, prof.phi) == pytest.approx(0.5,
                                                                    abs=1e-6)

    def test_sample_extends_both_tails(self):
        prof = solve_profile(logistic(1.0), 2.5)
        left = prof.sample(np.array([prof.grid[0] - 30.0]))[0]
        right = prof.sample(np.array([prof.grid[-1] + 30.0]))[0]
        assert 1.0 - left < 1e-6 and left < 1.0
        assert 0.0 < right < prof.phi[-1]
        ratio = right / prof.phi[-1]
        assert ratio == pytest.approx(np.exp(-prof.tail.lam * 30.0), rel=1e-9)


class TestMinimalSpeed:
    def test_logistic_floor(self):
        assert minimal_speed(logistic(1.0), tol=1e-3) == pytest.approx(
            2.0, rel=5e-3)

    def test_scaled_logistic(self):
        assert minimal_speed(logistic(4.0), tol=1e-3) == pytest.approx(
            4.0, rel=5e-3)

    def test_hump_exceeds_linear_floor(self):
        f1 = hump(0.5, 3.0, 0.05)
        cstar = minimal_speed(f1, tol=1e-3)
        assert cstar > 2.0 * np.sqrt(0.5) + 0.3

    def test_rejects_sign_changing_f(self):
        with pytest.raises(InvalidInputError):
            minimal_speed(bistable(0.25))


def test_hump_minimal_speed_against_spreading_oracle():
    """Independent route: the spreading speed of steep-front data equals the
    minimal speed, so a direct simulation cross-checks the shooting value.

    Uses a wide bump: the explicit reaction step needs dt below 1/Lip(f),
    and Lip scales like (bump mass)/eps^2.
    """
    from frontlab.interface import global_mean_speed
    from frontlab.reaction import time_independent
    from frontlab.solver import SolverConfig, evolve, init_from_profile

    f1 = hump(0.5, 3.0, 0.2)
    cstar = minimal_speed(f1, tol=1e-3)
    assert cstar > 2.0 * np.sqrt(0.5) + 0.3  # genuinely pushed
    prof = solve_profile(f1, cstar * 1.001)
    cfg = SolverConfig(scheme="imex_cn", dt=0.008, window_right=120.0,
                       snapshot_stride=50)
    state = init_from_profile(prof, 0.0, (-60.0, 120.0), dx=cfg.dx,
                              edge_tol_right=1e-6)
    traj = evolve(state, time_independent(f1), 60.0, cfg)
    est = global_mean_speed(traj.track.restricted(20.0, 60.0), min_gap=13.0)
    assert est.c_hat == pytest.approx(cstar, rel=0.03)


class TestFitTail:
    def test_exact_exponential(self):
        xi = np.arange(0.0, 40.0, 0.01)
        phi = np.exp(-0.5 * xi)
        fit = fit_tail_arrays(xi, phi, window=(10.0, 20.0))
        assert fit.lam == pytest.approx(0.5, abs=1e-12)
        assert fit.amplitude == pytest.approx(1.0, rel=1e-10)
        assert fit.r2 == pytest.approx(1.0, abs=1e-12)
        assert not fit.degenerate

    @pytest.mark.parametrize("c", [2.25, 2.5, 3.0])
    def test_matches_decay_law_supercritical(self, c):
        prof = solve_profile(logistic(1.0), c)
        fit = fit_tail(prof)
        assert fit.lam == pytest.approx(decay_exponent(1.0, 2.0, c), rel=0.01)

    def test_minimal_speed_tail_flagged_degenerate(self):
        prof = solve_profile(logistic(1.0), 2.0)
        fit = fit_tail(prof)
        assert fit.degenerate

    def test_rejects_nonpositive_values(self):
        xi = np.arange(0.0, 30.0, 0.01)
        phi = np.exp(-0.5 * xi) - 1e-4
        with pytest.raises(InvalidWindowError):
            fit_tail_arrays(xi, phi, window=(15.0, 25.0))

    def test_rejects_window_outside_tail(self):
        prof = solve_profile(logistic(1.0), 2.5)
        with pytest.raises(InvalidWindowError):
            fit_tail(prof, window=(-5.0, 5.0))
