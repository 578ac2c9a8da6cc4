"""Chebyshev approximation and the prescribed-degree formula."""

import numpy as np
import pytest

from gramscope import activations as act
from gramscope.chebyshev import cheb_approx, cheb_degree_for_eps


class TestDegreeFormula:
    def test_reference_value(self):
        # tau = 3 sqrt(log(10 * 1000)), eps = 0.01
        tau = 3.0 * np.sqrt(np.log(10 * 1000))
        assert tau == pytest.approx(9.105, abs=2e-3)
        assert cheb_degree_for_eps(tau, 0.01) == 20

    def test_monotone_in_eps(self):
        degrees = [cheb_degree_for_eps(3.0, e) for e in (1e-3, 1e-2, 1e-1, 1.0)]
        assert degrees == sorted(degrees, reverse=True)

    def test_high_precision_reference(self):
        # independent re-evaluation in 50-digit arithmetic
        from mpmath import mp, mpf

        mp.dps = 50
        val = mp.log((4 * mp.pi + 2 * mp.pi) / (mp.pi**2 * mpf("0.01"))) / mp.log(
            1 + mp.pi / mp.pi
        )
        assert cheb_degree_for_eps(np.pi, 0.01) == int(mp.ceil(val)) == 8

    def test_domain_guards(self):
        with pytest.raises(ValueError):
            cheb_degree_for_eps(-1.0, 0.1)
        with pytest.raises(ValueError):
            cheb_degree_for_eps(1.0, 0.0)
        with pytest.raises(ValueError):
            cheb_degree_for_eps(1.0, 2.0)


class TestChebApprox:
    def test_polynomial_fixed_point(self):
        # a cubic is reproduced exactly by its degree-3 projection
        f = lambda x: 0.3 * x**3 - 1.2 * x + 0.5
        approx = cheb_approx(f, 2.0, 3)
        assert approx.sup_error_estimate <= 1e-12

    def test_sup_estimate_dominates_sampled_error(self):
        approx = cheb_approx(np.tanh, 4.0, 9, grid_points=100_001)
        grid = np.linspace(-4.0, 4.0, 2_001)
        sampled = np.max(np.abs(approx.evaluate(grid) - np.tanh(grid)))
        assert approx.sup_error_estimate >= sampled - 1e-15

    def test_value_at_zero_alternating_sum(self):
        approx = cheb_approx(lambda x: 1.0 / np.cosh(x) ** 2, 3.0, 12)
        direct = float(approx.evaluate(np.array([0.0]))[0])
        assert abs(direct - approx.value_at_zero_alternating()) <= 1e-12

    def test_sigmoid_meets_formula_target(self):
        # the formula's own target: sigmoid(k x) on [-1, 1]
        k, eps = 5.0, 0.01
        p = cheb_degree_for_eps(k, eps)
        sig = lambda t: 1.0 / (1.0 + np.exp(-t))
        approx = cheb_approx(lambda t: sig(k * t / k * k), 1.0, p)  # f(t) = sig(k t)
        assert approx.sup_error_estimate <= eps

    def test_sigmoid_degrees_below_formula_fail_more(self):
        k, eps = 5.0, 0.01
        p = cheb_degree_for_eps(k, eps)
        sig = lambda t: 1.0 / (1.0 + np.exp(-k * t))
        err_full = cheb_approx(sig, 1.0, p).sup_error_estimate
        err_half = cheb_approx(sig, 1.0, max(p // 2, 1)).sup_error_estimate
        assert err_full <= eps
        assert err_half > err_full

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            cheb_approx(lambda x: np.log(x), 2.0, 4)

    def test_guards(self):
        with pytest.raises(ValueError):
            cheb_approx(np.tanh, -1.0, 3)
        with pytest.raises(ValueError):
            cheb_approx(np.tanh, 1.0, -1)


class TestTanhPrime:
    def test_formula_degree_documented_shortfall(self):
        # the prescribed degree approximates a single sigmoid transition;
        # the derivative's bump needs roughly twice the resolution, which
        # shows up as a measured error above the nominal target
        tau, eps = 9.0, 1e-3
        spec = act.catalog("tanh")
        p = cheb_degree_for_eps(tau, eps)
        err_nominal = cheb_approx(spec.df, tau, p).sup_error_estimate
        err_doubled = cheb_approx(spec.df, tau, cheb_degree_for_eps(2 * tau, eps)).sup_error_estimate
        assert err_doubled <= 3 * eps  # doubled-argument degree does the job
        assert err_nominal > err_doubled

    def test_large_eps_within_product_factor(self):
        spec = act.catalog("tanh")
        for tau in (3.0, 6.0, 9.0):
            p = cheb_degree_for_eps(tau, 0.1)
            err = cheb_approx(spec.df, tau, p).sup_error_estimate
            assert err <= 3 * 0.1
