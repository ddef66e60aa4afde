import numpy as np
import pytest

from frontlab.errors import ConstructionError, InvalidInputError
from frontlab.reaction import logistic
from frontlab.speedlaw import (
    BRANCH_MINIMAL,
    BRANCH_TAIL,
    construct_example_pair,
    predict_c2,
    run_switch_experiment,
)


class TestPredictC2:
    def test_identical_media_keep_speed_supercritical(self):
        pred = predict_c2(logistic(1.0), logistic(1.0), 2.5)
        assert pred.c2_predicted == pytest.approx(2.5, abs=1e-12)

    def test_identical_media_keep_speed_minimal(self):
        pred = predict_c2(logistic(1.0), logistic(1.0), 2.0)
        assert pred.c2_predicted == pytest.approx(2.0, abs=1e-12)
        assert pred.branch == BRANCH_MINIMAL

    def test_flagship_exact(self):
        pred = predict_c2(logistic(1.0), logistic(2.0), 2.5)
        assert pred.lambda_1c1 == 0.5
        assert pred.lambda_2_star_minus == pytest.approx(np.sqrt(2.0),
                                                         abs=1e-12)
        assert pred.branch == BRANCH_TAIL
        assert pred.c2_predicted == 4.5  # exactly representable chain
        assert pred.cstar_source == ("closed-form", "closed-form")

    def test_slowdown_exact(self):
        pred = predict_c2(logistic(1.0), logistic(0.25), 2.0)
        assert pred.lambda_1c1 == pytest.approx(1.0, abs=1e-12)
        assert pred.lambda_2_star_minus == pytest.approx(0.5, abs=1e-12)
        assert pred.branch == BRANCH_MINIMAL
        assert pred.c2_predicted == 1.0

    def test_below_minimal_rejected(self):
        with pytest.raises(InvalidInputError):
            predict_c2(logistic(1.0), logistic(2.0), 1.5)

    @pytest.mark.parametrize("c1", [2.0, 2.2, 2.5, 3.0, 4.0, 6.0])
    @pytest.mark.parametrize("r2", [0.25, 1.0, 2.0])
    def test_never_below_second_minimal_speed(self, c1, r2):
        pred = predict_c2(logistic(1.0), logistic(r2), c1)
        assert pred.c2_predicted >= pred.cstar2 - 1e-12

    def test_tail_branch_minimum_sits_at_crossover(self):
        # lam -> lam + f2'(0)/lam attains 2 sqrt(f2'(0)) at lam = sqrt(f2'(0));
        # scanning c1 the predicted c2 never dips below that value and
        # approaches it continuously at the branch point
        r2 = 0.25
        c2s = [predict_c2(logistic(1.0), logistic(r2), c1).c2_predicted
               for c1 in np.linspace(2.0, 4.0, 81)]
        assert min(c2s) == pytest.approx(2.0 * np.sqrt(r2), abs=1e-12)

    def test_continuity_at_branch_point(self):
        r2 = 0.25
        h = 1e-8
        lo = predict_c2(logistic(1.0), logistic(r2), 2.5 - h).c2_predicted
        hi = predict_c2(logistic(1.0), logistic(r2), 2.5 + h).c2_predicted
        assert abs(hi - lo) < 1e-6


class TestSwitchExperiment:
    def test_no_switch_reproduces_speed(self):
        rep = run_switch_experiment(logistic(1.0), logistic(1.0), 2.5,
                                    horizon=60.0, burn_in=15.0,
                                    keep_trajectory=False)
        assert abs(rep.c2_measured - 2.5) / 2.5 < 0.02
        assert rep.passed

    def test_report_serializes(self):
        import json
        rep = run_switch_experiment(logistic(1.0), logistic(2.0), 2.5,
                                    horizon=60.0, burn_in=15.0,
                                    keep_trajectory=False)
        blob = json.dumps(rep.to_dict())
        assert "c2_measured" in blob
        assert rep.tail_lambda_at_switch_end == pytest.approx(0.5, rel=0.02)


@pytest.fixture(scope="module")
def pair():
    return construct_example_pair(3.0, 0.05)


class TestExamplePair:
    def test_minimal_speeds_ordered(self, pair):
        assert pair.cstar2 == pytest.approx(2.0, abs=1e-12)
        assert pair.cstar1 > pair.cstar2

    def test_slowdown_at_minimal_speed(self, pair):
        pred = predict_c2(pair.f1, pair.f2, pair.cstar1)
        assert pred.branch == BRANCH_MINIMAL
        assert pred.c2_predicted < pair.cstar1

    def test_acceleration_above_minimal(self, pair):
        for c1 in pair.cstar1 + np.array([0.05, 0.2, 0.5, 1.0, 2.0]):
            pred = predict_c2(pair.f1, pair.f2, c1)
            assert pred.c2_predicted > c1

    def test_bisection_sensitivity_reported(self, pair):
        pred = predict_c2(pair.f1, pair.f2, pair.cstar1)
        assert pred.cstar_source[0] == "bisection"
        assert pred.c2_sensitivity >= 0.0

    def test_insufficient_bump_mass_rejected(self):
        with pytest.raises(ConstructionError):
            construct_example_pair(1.0, 0.05)  # sqrt(2) < cstar2 = 2


def test_field_tail_lambda_on_synthetic():
    from frontlab.solver import FieldState
    from frontlab.speedlaw import _field_tail_lambda
    x = np.arange(-200, 1200) * 0.05
    u = np.minimum(np.exp(-0.4 * x), 1.0)
    state = FieldState(0.0, -200, 0.05, u)
    assert _field_tail_lambda(state) == pytest.approx(0.4, rel=1e-6)
