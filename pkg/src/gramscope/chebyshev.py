"""Sup-norm polynomial approximation on intervals via Chebyshev series."""

from dataclasses import dataclass

import numpy as np
import numpy.polynomial.chebyshev as npcheb


def cheb_degree_for_eps(tau, eps):
    """Degree prescribed for approximating to sup error ``eps`` on ``[-tau, tau]``:

    ``ceil( log((4 pi + 2 tau) / (pi^2 eps)) / log(1 + pi / tau) )``.
    """
    if tau <= 0:
        raise ValueError("half-width must be positive")
    if not 0.0 < eps <= 1.0:
        raise ValueError("target error must lie in (0, 1]")
    num = np.log((4.0 * np.pi + 2.0 * tau) / (np.pi**2 * eps))
    den = np.log(1.0 + np.pi / tau)
    return int(np.ceil(num / den))


@dataclass(frozen=True)
class ChebyshevApprox:
    """Chebyshev series of ``f(half_width * t)`` for ``t`` in ``[-1, 1]``."""

    half_width: float
    coeffs: np.ndarray
    degree: int
    sup_error_estimate: float

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))

    def evaluate(self, x):
        """Evaluate the approximant at points of ``[-half_width, half_width]``."""
        t = np.asarray(x, dtype=float) / self.half_width
        return npcheb.chebval(t, self.coeffs)

    def value_at_zero_alternating(self):
        """The series at 0 via ``T_k(0)``: the alternating sum of even coefficients."""
        c = self.coeffs[::2]
        signs = (-1.0) ** np.arange(c.size)
        return float(np.dot(signs, c))


def cheb_approx(f, half_width, degree, grid_points=100_001):
    """Chebyshev approximation of ``f`` on ``[-half_width, half_width]``.

    Coefficients come from Chebyshev-Gauss quadrature with at least
    ``4 * (degree + 1)`` nodes; the sup error is measured on a uniform grid.
    """
    if half_width <= 0:
        raise ValueError("half-width must be positive")
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    n = max(4 * (degree + 1), 64)
    j = np.arange(n)
    t = np.cos(np.pi * (j + 0.5) / n)
    fv = np.asarray(f(half_width * t), dtype=float)
    if not np.all(np.isfinite(fv)):
        bad = half_width * t[~np.isfinite(fv)][0]
        raise ValueError(f"non-finite function value at x={bad!r}")
    phases = np.pi * (j + 0.5) / n
    coeffs = np.empty(degree + 1)
    for m in range(degree + 1):
        coeffs[m] = (2.0 - (m == 0)) / n * np.dot(fv, np.cos(m * phases))
    approx = ChebyshevApprox(
        half_width=float(half_width),
        coeffs=coeffs,
        degree=degree,
        sup_error_estimate=0.0,
    )
    grid = np.linspace(-1.0, 1.0, grid_points)
    err = np.max(np.abs(npcheb.chebval(grid, coeffs) - f(half_width * grid)))
    object.__setattr__(approx, "sup_error_estimate", float(err))
    return approx
