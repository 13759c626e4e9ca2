import math

import numpy as np
import pytest

from smoothrisk.losses import (
    ReferenceLoss,
    SmoothedHingeLoss,
    binary_entropy,
    reference_loss_deriv,
    reference_loss_value,
    smoothed_hinge_deriv,
    smoothed_hinge_second_deriv,
    smoothed_hinge_value,
    variational_maximizer,
    variational_objective,
)

GAMMAS = (0.5, 1.0, 2.0, 5.0, 10.0, 50.0)
ZGRID = np.arange(-10.0, 10.0 + 1e-9, 0.01)


def grid_maximize_objective(z, gamma):
    """Brute-force oracle for the variational form: coarse grid + ternary."""
    alphas = np.arange(0.0005, 0.99951, 0.0005)
    objs = variational_objective(z, gamma, alphas)
    best = float(alphas[np.argmax(objs)])
    lo, hi = max(best - 0.001, 0.0), min(best + 0.001, 1.0)
    for _ in range(200):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if variational_objective(z, gamma, m1) >= variational_objective(z, gamma, m2):
            hi = m2
        else:
            lo = m1
    alpha = 0.5 * (lo + hi)
    return alpha, variational_objective(z, gamma, alpha)


class TestValue:
    def test_zero_exponent(self):
        assert smoothed_hinge_value(1.0, 2.0) == pytest.approx(math.log(2) / 2, abs=1e-12)

    def test_printed_formula_at_origin(self):
        expected = math.log(1 + math.e)
        assert smoothed_hinge_value(0.0, 1.0) == pytest.approx(expected, abs=1e-12)
        # cross-check against maximizing the variational form directly
        _, obj = grid_maximize_objective(0.0, 1.0)
        assert obj == pytest.approx(expected, abs=1e-7)

    def test_hinge_limit(self):
        assert smoothed_hinge_value(-0.5, 1000.0) == pytest.approx(1.5, abs=1e-3)

    def test_large_gamma_no_overflow(self):
        vals = smoothed_hinge_value(np.array([-50.0, 0.0, 50.0]), 1e4)
        assert np.all(np.isfinite(vals))
        assert vals[0] == pytest.approx(51.0, abs=1e-9)
        assert vals[2] == 0.0  # saturated tail underflows cleanly

    def test_sandwich(self):
        hinge = np.maximum(0.0, 1.0 - ZGRID)
        for g in GAMMAS:
            v = smoothed_hinge_value(ZGRID, g)
            assert np.all(v >= hinge - 1e-12)
            assert np.all(v <= hinge + math.log(2) / g + 1e-12)
            assert np.all(v > 0.0)

    def test_midpoint_convexity(self):
        for g in GAMMAS:
            v = smoothed_hinge_value(ZGRID, g)
            assert np.all(v[1:-1] <= 0.5 * (v[:-2] + v[2:]) + 1e-12)


class TestDerivatives:
    def test_sigmoid_at_zero_argument(self):
        assert smoothed_hinge_deriv(1.0, 5.0) == pytest.approx(-0.5, abs=1e-15)

    def test_deriv_value_at_origin(self):
        expected = -math.e / (1 + math.e)
        got = smoothed_hinge_deriv(0.0, 1.0)
        assert got == pytest.approx(expected, abs=1e-12)
        h = 1e-6
        fd = (smoothed_hinge_value(h, 1.0) - smoothed_hinge_value(-h, 1.0)) / (2 * h)
        assert got == pytest.approx(fd, rel=1e-6)

    def test_saturated_tail(self):
        assert abs(smoothed_hinge_deriv(100.0, 1.0)) < 1e-30

    def test_second_deriv_peak(self):
        assert smoothed_hinge_second_deriv(1.0, 8.0) == pytest.approx(2.0, abs=1e-12)

    def test_second_deriv_at_origin(self):
        expected = math.e / (1 + math.e) ** 2
        got = smoothed_hinge_second_deriv(0.0, 1.0)
        assert got == pytest.approx(expected, abs=1e-12)
        h = 1e-6
        fd = (smoothed_hinge_deriv(h, 1.0) - smoothed_hinge_deriv(-h, 1.0)) / (2 * h)
        assert got == pytest.approx(fd, abs=1e-5)

    def test_second_deriv_far_tail(self):
        assert smoothed_hinge_second_deriv(-50.0, 1.0) == pytest.approx(0.0, abs=1e-20)

    @pytest.mark.parametrize("gamma", GAMMAS)
    def test_finite_difference_agreement_on_grid(self, gamma):
        h = 1e-6
        fd1 = (
            smoothed_hinge_value(ZGRID + h, gamma) - smoothed_hinge_value(ZGRID - h, gamma)
        ) / (2 * h)
        assert np.max(np.abs(fd1 - smoothed_hinge_deriv(ZGRID, gamma))) < 1e-5
        fd2 = (
            smoothed_hinge_deriv(ZGRID + h, gamma) - smoothed_hinge_deriv(ZGRID - h, gamma)
        ) / (2 * h)
        assert np.max(np.abs(fd2 - smoothed_hinge_second_deriv(ZGRID, gamma))) < 1e-5

    @pytest.mark.parametrize("gamma", GAMMAS)
    def test_derivative_bounds(self, gamma):
        d1 = smoothed_hinge_deriv(ZGRID, gamma)
        d2 = smoothed_hinge_second_deriv(ZGRID, gamma)
        assert np.all(np.abs(d1) <= 1.0)
        assert np.all(d1 < 0.0)
        assert np.all(d2 >= 0.0)
        assert np.all(d2 <= gamma / 4 + 1e-15)


class TestVariationalForm:
    def test_symmetric_maximizer(self):
        assert variational_maximizer(1.0, 3.0) == pytest.approx(0.5, abs=1e-15)

    def test_grid_oracle_at_origin(self):
        alpha, _ = grid_maximize_objective(0.0, 1.0)
        assert variational_maximizer(0.0, 1.0) == pytest.approx(alpha, abs=1e-6)
        assert variational_maximizer(0.0, 1.0) == pytest.approx(
            math.e / (1 + math.e), abs=1e-12
        )

    def test_grid_oracle_negative_margin(self):
        alpha, _ = grid_maximize_objective(-3.0, 2.0)
        assert variational_maximizer(-3.0, 2.0) == pytest.approx(alpha, abs=1e-6)
        assert variational_maximizer(-3.0, 2.0) == pytest.approx(
            1 / (1 + math.exp(-8)), abs=1e-12
        )

    def test_maximizer_in_open_interval(self):
        vals = variational_maximizer(np.array([-1e5, 0.0, 1e5]), 10.0)
        assert np.all(vals > 0.0)
        assert np.all(vals < 1.0)

    @pytest.mark.parametrize("gamma", GAMMAS)
    def test_plugging_maximizer_recovers_value(self, gamma):
        alpha = variational_maximizer(ZGRID, gamma)
        obj = variational_objective(ZGRID, gamma, alpha)
        val = smoothed_hinge_value(ZGRID, gamma)
        assert np.max(np.abs(obj - val)) < 1e-8

    def test_entropy_endpoints(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        assert binary_entropy(0.5) == pytest.approx(math.log(2), abs=1e-15)


class TestReferenceLosses:
    @pytest.mark.parametrize(
        "kind,z,expected",
        [
            ("hinge", 0.5, 0.5),
            ("hinge", 2.0, 0.0),
            ("exponential", 0.0, 1.0),
            ("logit", 0.0, math.log(2)),
            ("truncated_quadratic", -1.0, 4.0),
        ],
    )
    def test_values(self, kind, z, expected):
        assert reference_loss_value(kind, z) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("kind", ("hinge", "exponential", "logit", "truncated_quadratic"))
    def test_calibration_prerequisites(self, kind):
        # convex, nonnegative, negative derivative at the origin
        z = np.linspace(-5, 5, 801)
        v = reference_loss_value(kind, z)
        assert np.all(v >= 0.0)
        assert np.all(v[1:-1] <= 0.5 * (v[:-2] + v[2:]) + 1e-9)
        assert reference_loss_deriv(kind, 0.0) < 0.0

    def test_loss_objects_delegate(self):
        loss = ReferenceLoss("logit")
        assert loss.value(0.3) == reference_loss_value("logit", 0.3)
        assert loss.deriv(0.3) == reference_loss_deriv("logit", 0.3)
        sm = SmoothedHingeLoss(2.5)
        assert sm.value(0.1) == smoothed_hinge_value(0.1, 2.5)
        assert sm.deriv(0.1) == smoothed_hinge_deriv(0.1, 2.5)
        assert sm.second_deriv(0.1) == smoothed_hinge_second_deriv(0.1, 2.5)


class TestErrors:
    def test_nonpositive_gamma(self):
        with pytest.raises(ValueError):
            smoothed_hinge_value(0.0, 0.0)
        with pytest.raises(ValueError):
            smoothed_hinge_deriv(0.0, -1.0)
        with pytest.raises(ValueError):
            SmoothedHingeLoss(0.0)

    def test_non_finite_margin(self):
        with pytest.raises(ValueError):
            smoothed_hinge_value(math.nan, 1.0)
        with pytest.raises(ValueError):
            smoothed_hinge_second_deriv(math.inf, 1.0)

    def test_unknown_reference_kind(self):
        with pytest.raises(ValueError):
            reference_loss_value("huber", 0.0)
        with pytest.raises(ValueError):
            ReferenceLoss("huber")

    def test_entropy_domain(self):
        with pytest.raises(ValueError):
            binary_entropy(1.5)
