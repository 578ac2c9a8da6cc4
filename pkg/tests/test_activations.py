"""Catalog activations: derivative consistency, kink metadata, constants."""

import numpy as np
import pytest

from gramscope import activations as act

ALL_NAMES = act.catalog_names()


def central_diff(f, x, h=1e-6):
    return (f(x + h) - f(x - h)) / (2 * h)


def sample_away_from_kink(spec, rng, count=1000, lo=-6.0, hi=6.0, margin=1e-3):
    x = rng.uniform(lo, hi, count)
    if spec.kink is not None:
        x = x[np.abs(x - spec.kink.location) > margin]
    return x


@pytest.mark.parametrize("name", ALL_NAMES)
def test_first_derivative_consistency(name):
    spec = act.catalog(name)
    rng = np.random.default_rng(0)
    x = sample_away_from_kink(spec, rng)
    fd = central_diff(spec.f, x)
    an = spec.df(x)
    scale = np.maximum(np.abs(an), 1e-3)
    assert np.max(np.abs(fd - an) / scale) <= 1e-5


@pytest.mark.parametrize("name", ALL_NAMES)
def test_second_derivative_consistency(name):
    spec = act.catalog(name)
    rng = np.random.default_rng(1)
    x = sample_away_from_kink(spec, rng, margin=1e-2)
    fd = central_diff(spec.df, x, h=1e-5)
    an = spec.d2f(x)
    scale = np.maximum(np.abs(an), 1e-2)
    assert np.max(np.abs(fd - an) / scale) <= 1e-4


@pytest.mark.parametrize("name", ALL_NAMES)
def test_lipschitz_bound(name):
    spec = act.catalog(name)
    x = np.random.default_rng(2).uniform(-10, 10, 10_000)
    assert np.all(np.abs(spec.df(x)) <= spec.lipschitz_alpha + 1e-12)


class TestKinkClasses:
    def test_classes(self):
        assert act.catalog("relu").kink.order == 1
        assert act.catalog("lrelu").kink.order == 1
        assert act.catalog("selu").kink.order == 1
        assert act.catalog("elu").kink.order == 2
        for name in ("tanh", "sigmoid", "swish", "linear", "quadratic"):
            assert act.catalog(name).kink is None

    @pytest.mark.parametrize("name", ["relu", "lrelu", "selu", "elu"])
    def test_recorded_jump_matches_one_sided_limits(self, name):
        spec = act.catalog(name)
        k = spec.kink
        h = 1e-7
        deriv = spec.df if k.order == 1 else spec.d2f
        gap = abs(float(deriv(np.array([k.location + h]))[0])
                  - float(deriv(np.array([k.location - h]))[0]))
        assert gap == pytest.approx(k.jump, abs=1e-6)

    def test_relu_jump_is_unit_step(self):
        spec = act.catalog("relu")
        assert spec.kink.jump == 1.0
        # right-limit convention at the kink itself
        assert spec.df(np.array([0.0]))[0] == 1.0

    def test_elu_jump_from_one_sided_limits(self):
        # left limit of f'' is e^x -> 1, right limit is 0
        spec = act.catalog("elu")
        assert spec.kink.jump == pytest.approx(1.0)
        assert spec.d2f(np.array([-1e-9]))[0] == pytest.approx(1.0, abs=1e-8)
        assert spec.d2f(np.array([1e-9]))[0] == 0.0

    @pytest.mark.parametrize("name", ["elu"])
    def test_j2_value_and_slope_continuous(self, name):
        spec = act.catalog(name)
        h = 1e-10
        lo, hi = np.array([-h]), np.array([h])
        assert abs(spec.f(lo)[0] - spec.f(hi)[0]) <= 1e-9
        assert abs(spec.df(lo)[0] - spec.df(hi)[0]) <= 1e-9

    def test_selu_jump_uses_true_constants(self):
        spec = act.catalog("selu")
        assert spec.kink.jump == pytest.approx(act.SELU_ALPHA2 - act.SELU_ALPHA1)


class TestCPhi:
    def test_linear_is_one(self):
        assert act.catalog("linear").c_phi_deep == pytest.approx(1.0, abs=1e-10)

    def test_relu_is_sqrt2(self):
        # E[relu(z)^2] is the half-Gaussian integral 1/2
        assert act.catalog("relu").c_phi_deep == pytest.approx(np.sqrt(2.0), abs=1e-10)

    def test_tanh_stable_under_node_doubling(self):
        spec = act.catalog("tanh")
        v1 = act.c_phi_deep(spec, 400)
        v2 = act.c_phi_deep(spec, 800)
        assert v1 > 0
        assert abs(v1 - v2) < 1e-8

    def test_normalization_identity(self):
        for name in ("tanh", "elu", "swish"):
            spec = act.catalog(name)
            assert spec.c_phi_deep**2 * spec.second_moment() == pytest.approx(1.0, abs=1e-6)

    def test_shallow_constant_fixed(self):
        assert all(act.catalog(n).c_phi_shallow == 1.0 for n in ALL_NAMES)

    def test_degenerate_zero_activation(self):
        zero = act.polynomial([0.0], name="zero")
        with pytest.raises(act.DegenerateActivationError):
            act.c_phi_deep(zero)

    def test_node_floor(self):
        with pytest.raises(ValueError):
            act.c_phi_deep(act.catalog("tanh"), 32)


class TestSwishIdentity:
    def test_zero_point(self):
        assert act.swish_identity_residual([0.0]) == 0.0

    def test_dense_grid(self):
        grid = np.linspace(-10, 10, 10_000)
        assert act.swish_identity_residual(grid) <= 1e-12

    def test_single_point(self):
        assert act.swish_identity_residual([1.0]) <= 1e-15

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            act.swish_identity_residual([])


class TestCatalogErrors:
    def test_unknown_name(self):
        with pytest.raises(KeyError):
            act.catalog("gelu")

    def test_polynomial_requires_coeffs(self):
        with pytest.raises(ValueError):
            act.catalog("polynomial")
        with pytest.raises(ValueError):
            act.catalog("polynomial", poly_coeffs=[])

    def test_polynomial_antiderivative(self):
        # f' = 1 + 2x  =>  f = x + x^2 with zero constant term
        spec = act.catalog("polynomial", poly_coeffs=[1.0, 2.0])
        x = np.linspace(-2, 2, 9)
        np.testing.assert_allclose(spec.f(x), x + x**2, atol=1e-14)
        np.testing.assert_allclose(spec.df(x), 1 + 2 * x, atol=1e-14)
        np.testing.assert_allclose(spec.d2f(x), 2.0, atol=1e-14)

    def test_linear_derivatives(self):
        spec = act.catalog("linear")
        x = np.linspace(-5, 5, 11)
        np.testing.assert_allclose(spec.df(x), 1.0)
        np.testing.assert_allclose(spec.d2f(x), 0.0)

    def test_lrelu_slope_param(self):
        spec = act.catalog("lrelu", lrelu_slope=0.2)
        assert spec.kink.jump == pytest.approx(0.8)
        with pytest.raises(ValueError):
            act.catalog("lrelu", lrelu_slope=1.5)
