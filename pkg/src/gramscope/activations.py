"""Activation functions with derivative metadata.

Every activation used by the eigenvalue machinery is described by an
:class:`ActivationSpec`: vectorized evaluators for the function and its first
two derivatives, the location/order/magnitude of a derivative jump when there
is one, and the constants the convergence bounds consume.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from gramscope import quadrature

#: standard published SELU constants (scale for x >= 0, exponential branch)
SELU_ALPHA1 = 1.0507
SELU_ALPHA2 = 1.6733

#: default negative-side slope for leaky ReLU
LRELU_SLOPE = 0.01


class DegenerateActivationError(ValueError):
    """Second Gaussian moment of the activation vanishes."""


@dataclass(frozen=True)
class Kink:
    """Jump discontinuity of the ``order``-th derivative at ``location``.

    ``jump`` is the measured gap between one-sided limits of that derivative;
    lower-order derivatives are continuous at the kink.
    """

    order: int
    location: float
    jump: float


@dataclass(frozen=True)
class ActivationSpec:
    """An activation with derivatives and the constants the bounds need.

    ``f``, ``df``, ``d2f`` are vectorized maps for the function and its first
    two derivatives.  At a kink location the evaluators return the
    right-limit value, matching the ``x >= location`` indicator convention.
    ``lipschitz_alpha`` bounds ``|f'|`` wherever it exists, ``smooth_beta``
    bounds ``|f''|`` away from the kink.  ``c_phi_shallow`` is fixed to 1 for
    one-hidden-layer nets; ``c_phi_deep`` is ``(E f(z)^2)^{-1/2}`` under the
    standard Gaussian, computed by quadrature at construction.
    """

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    d2f: Callable[[np.ndarray], np.ndarray]
    kink: Optional[Kink]
    lipschitz_alpha: float
    smooth_beta: float
    c_phi_shallow: float = 1.0
    c_phi_deep: float = field(default=float("nan"))
    pair_eval: Optional[Callable] = None  # fused (f, f') when one is cheap from the other

    @property
    def is_smooth(self):
        return self.kink is None

    def f_and_df(self, z):
        """Evaluate ``(f(z), f'(z))``, sharing work when possible."""
        if self.pair_eval is not None:
            return self.pair_eval(z)
        return self.f(z), self.df(z)

    def _moment_rule(self, quad_nodes):
        # piecewise-smooth integrands are split at the kink; a global
        # Gauss-Hermite rule stalls there
        if self.kink is None:
            return quadrature.gauss_hermite_prob(quad_nodes)
        return quadrature.gaussian_split_nodes(
            self.kink.location, panels=max(48, quad_nodes // 8)
        )

    def second_moment(self, quad_nodes=400):
        """``E[f(z)^2]`` under the standard Gaussian."""
        x, w = self._moment_rule(quad_nodes)
        return float(np.dot(w, self.f(x) ** 2))

    def deriv_second_moment(self, quad_nodes=400):
        """``E[f'(z)^2]`` under the standard Gaussian."""
        x, w = self._moment_rule(quad_nodes)
        return float(np.dot(w, self.df(x) ** 2))


def c_phi_deep(spec, quad_nodes=400):
    """Normalization ``(E f(z)^2)^{-1/2}`` by Gauss-Hermite quadrature.

    The value is accepted only if doubling the node count moves it by less
    than 1e-8.
    """
    if quad_nodes < 64:
        raise ValueError("quad_nodes must be at least 64")
    coarse = spec.second_moment(quad_nodes)
    fine = spec.second_moment(2 * quad_nodes)
    if fine <= 1e-15:
        raise DegenerateActivationError(
            f"activation {spec.name!r} has vanishing second Gaussian moment"
        )
    val = fine ** -0.5
    if abs(val - coarse ** -0.5) >= 1e-8:
        raise ValueError(
            f"c_phi quadrature did not stabilize for {spec.name!r} "
            f"at {quad_nodes} nodes"
        )
    return val


def _finish(spec):
    """Fill in c_phi_deep (NaN for activations with zero second moment)."""
    try:
        c = c_phi_deep(spec, 400)
    except DegenerateActivationError:
        c = float("nan")
    object.__setattr__(spec, "c_phi_deep", c)
    return spec


def _relu():
    return ActivationSpec(
        name="relu",
        f=lambda x: np.maximum(x, 0.0),
        df=lambda x: np.where(x >= 0.0, 1.0, 0.0),
        d2f=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        kink=Kink(order=1, location=0.0, jump=1.0),
        lipschitz_alpha=1.0,
        smooth_beta=0.0,
    )


def _lrelu(slope=LRELU_SLOPE):
    return ActivationSpec(
        name="lrelu",
        f=lambda x: np.where(x >= 0.0, x, slope * x),
        df=lambda x: np.where(x >= 0.0, 1.0, slope),
        d2f=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        kink=Kink(order=1, location=0.0, jump=1.0 - slope),
        lipschitz_alpha=1.0,
        smooth_beta=0.0,
    )


def _linear():
    return ActivationSpec(
        name="linear",
        f=lambda x: np.asarray(x, dtype=float),
        df=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        d2f=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        kink=None,
        lipschitz_alpha=1.0,
        smooth_beta=0.0,
    )


def _tanh():
    def d2(x):
        t = np.tanh(x)
        return -2.0 * t * (1.0 - t * t)

    def pair(x):
        t = np.tanh(x)
        return t, 1.0 - t * t

    return ActivationSpec(
        name="tanh",
        f=np.tanh,
        df=lambda x: 1.0 / np.cosh(x) ** 2,
        d2f=d2,
        kink=None,
        lipschitz_alpha=1.0,
        smooth_beta=4.0 / (3.0 * np.sqrt(3.0)),  # max |tanh''|
        pair_eval=pair,
    )


def _sigmoid_fn(x):
    # stable two-branch evaluation
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _sigmoid():
    def d1(x):
        s = _sigmoid_fn(x)
        return s * (1.0 - s)

    def d2(x):
        s = _sigmoid_fn(x)
        return s * (1.0 - s) * (1.0 - 2.0 * s)

    return ActivationSpec(
        name="sigmoid",
        f=_sigmoid_fn,
        df=d1,
        d2f=d2,
        kink=None,
        lipschitz_alpha=0.25,
        smooth_beta=1.0 / (6.0 * np.sqrt(3.0)),  # max |sigmoid''|
    )


def _swish():
    def f(x):
        return np.asarray(x, dtype=float) * _sigmoid_fn(x)

    def d1(x):
        s = _sigmoid_fn(x)
        return s + x * s * (1.0 - s)

    def d2(x):
        s = _sigmoid_fn(x)
        sp = s * (1.0 - s)
        return 2.0 * sp + x * sp * (1.0 - 2.0 * s)

    return ActivationSpec(
        name="swish",
        f=f,
        df=d1,
        d2f=d2,
        kink=None,
        lipschitz_alpha=1.1,  # sup |swish'| ~ 1.0998
        smooth_beta=0.51,  # sup |swish''| ~ 0.5
    )


def _elu():
    def f(x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0.0, x, np.expm1(np.minimum(x, 0.0)))

    def d1(x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0.0, 1.0, np.exp(np.minimum(x, 0.0)))

    def d2(x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0.0, 0.0, np.exp(np.minimum(x, 0.0)))

    return ActivationSpec(
        name="elu",
        f=f,
        df=d1,
        d2f=d2,
        kink=Kink(order=2, location=0.0, jump=1.0),
        lipschitz_alpha=1.0,
        smooth_beta=1.0,
    )


def _selu(a1=SELU_ALPHA1, a2=SELU_ALPHA2):
    def f(x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0.0, a1 * x, a2 * np.expm1(np.minimum(x, 0.0)))

    def d1(x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0.0, a1, a2 * np.exp(np.minimum(x, 0.0)))

    def d2(x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0.0, 0.0, a2 * np.exp(np.minimum(x, 0.0)))

    return ActivationSpec(
        name="selu",
        f=f,
        df=d1,
        d2f=d2,
        # measured one-sided gap a2 - a1, not normalized to 1
        kink=Kink(order=1, location=0.0, jump=abs(a2 - a1)),
        lipschitz_alpha=a2,
        smooth_beta=a2,
    )


def polynomial(deriv_coeffs, name="polynomial"):
    """Activation whose derivative is the polynomial with graded coefficients.

    ``deriv_coeffs[j]`` multiplies ``x**j`` in ``f'``; ``f`` is the
    antiderivative with zero constant term.
    """
    c = np.asarray(deriv_coeffs, dtype=float)
    if c.size == 0:
        raise ValueError("polynomial activation needs at least one coefficient")
    powers = np.arange(c.size)
    anti = c / (powers + 1.0)  # f = sum anti[j] x^{j+1}
    d2 = c[1:] * powers[1:] if c.size > 1 else np.zeros(0)

    def _ev(coeffs, shift, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for j in range(coeffs.size - 1, -1, -1):
            out = out * x + coeffs[j]
        return out * x**shift if shift else out

    deg2 = c.size >= 2
    return ActivationSpec(
        name=name,
        f=lambda x: _ev(anti, 1, x),
        df=lambda x: _ev(c, 0, x),
        d2f=lambda x: _ev(d2, 0, x) if deg2 else np.zeros_like(np.asarray(x, dtype=float)),
        kink=None,
        lipschitz_alpha=float(abs(c[0])) if c.size == 1 else float("inf"),
        smooth_beta=float(abs(d2[0])) if c.size == 2 else (0.0 if c.size == 1 else float("inf")),
    )


_BUILDERS = {
    "relu": _relu,
    "lrelu": _lrelu,
    "linear": _linear,
    "tanh": _tanh,
    "sigmoid": _sigmoid,
    "swish": _swish,
    "elu": _elu,
    "selu": _selu,
    "quadratic": lambda: polynomial([0.0, 2.0], name="quadratic"),
}


def catalog(name, poly_coeffs=None, lrelu_slope=None):
    """Look up an activation by name.

    ``polynomial`` requires ``poly_coeffs`` (graded coefficients of the
    derivative); ``lrelu`` accepts an optional negative-side slope.
    """
    if name == "polynomial":
        if poly_coeffs is None or len(poly_coeffs) == 0:
            raise ValueError("polynomial activation requires coefficients")
        return _finish(polynomial(poly_coeffs))
    if name == "lrelu" and lrelu_slope is not None:
        if not 0 <= lrelu_slope < 1:
            raise ValueError("lrelu slope must lie in [0, 1)")
        return _finish(_lrelu(lrelu_slope))
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise KeyError(f"unknown activation {name!r}") from None
    return _finish(builder())


def catalog_names():
    return sorted(_BUILDERS)


def swish_identity_residual(grid):
    """Max deviation of swish(x) from (x/2)(tanh(x/2) + 1) over the grid."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid must be nonempty")
    sw = grid * _sigmoid_fn(grid)
    alt = 0.5 * grid * (np.tanh(0.5 * grid) + 1.0)
    return float(np.max(np.abs(sw - alt)))
