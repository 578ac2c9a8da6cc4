"""Hermite expansions of activation derivatives.

Uses the orthonormal probabilists' polynomials ``He_k`` (the monic family
scaled by ``1/sqrt(k!)``), which satisfy
``E[He_m(z) He_n(z)] = delta_{mn}`` for ``z ~ N(0, 1)``.  The physicists'
counterparts ``H_k`` are orthonormal under ``N(0, 1/2)`` and related by
``He_m(x) = H_m(x / sqrt(2))``.
"""

from dataclasses import dataclass

import numpy as np

from gramscope import quadrature
from gramscope.kernels import hermite_design

MAX_DEGREE = 10_000

#: quadrature-noise floor below which coefficients are treated as zero
COEFF_FLOOR = 1e-14


class QuadratureUnstableError(RuntimeError):
    """Doubling the node count moved an expansion coefficient too much."""


def hermite_prob(k, x):
    """Orthonormal probabilists' Hermite polynomial ``He_k`` at ``x``."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    if k > MAX_DEGREE:
        raise ValueError(f"degree {k} exceeds the recurrence guard {MAX_DEGREE}")
    x = np.asarray(x, dtype=float)
    return hermite_design(np.atleast_1d(x).ravel(), k)[k].reshape(x.shape)


def hermite_phys(k, x):
    """Orthonormal physicists' Hermite polynomial, ``H_k(x) = He_k(sqrt(2) x)``."""
    return hermite_prob(k, np.sqrt(2.0) * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class HermiteSeries:
    """Probabilists' Hermite coefficients ``c[0..degree]`` of ``target``."""

    coeffs: np.ndarray
    degree: int
    quad_nodes: int
    target: str

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        H = hermite_design(np.atleast_1d(x).ravel(), self.degree)
        return (self.coeffs @ H).reshape(x.shape)

    def parseval_mass(self):
        return float(np.sum(self.coeffs**2))


def _expand_once(f, p, nodes, weights):
    fx = f(nodes)
    if not np.all(np.isfinite(fx)):
        bad = nodes[~np.isfinite(np.asarray(fx))][0]
        raise ValueError(f"non-finite integrand value at quadrature node x={bad!r}")
    H = hermite_design(nodes, p)
    return H @ (weights * fx)


def hermite_expand(f, p, quad_nodes=400, kink=None, target="f"):
    """Expand ``f`` in orthonormal probabilists' Hermite polynomials.

    Smooth targets use Gauss-Hermite quadrature on physicists' nodes rescaled
    by ``sqrt(2)``.  Targets with a kink at ``kink.location`` are integrated
    by composite Gauss-Legendre split at the kink and weighted by the
    Gaussian density, since a global rule loses accuracy at discontinuities.
    Every expansion is recomputed at doubled resolution and rejected if any
    coefficient moves by 1e-7 or more.
    """
    if p < 0:
        raise ValueError("degree must be nonnegative")
    if p > MAX_DEGREE:
        raise ValueError(f"degree {p} exceeds the recurrence guard {MAX_DEGREE}")
    if quad_nodes < 4 * (p + 1):
        raise ValueError("quad_nodes must be at least 4*(p+1)")

    if kink is None:
        x1, w1 = quadrature.gauss_hermite_prob(quad_nodes)
        x2, w2 = quadrature.gauss_hermite_prob(2 * quad_nodes)
    else:
        panels = max(48, quad_nodes // 8)
        x1, w1 = quadrature.gaussian_split_nodes(kink, panels=panels)
        x2, w2 = quadrature.gaussian_split_nodes(kink, panels=2 * panels)
    coarse = _expand_once(f, p, x1, w1)
    fine = _expand_once(f, p, x2, w2)
    if np.max(np.abs(fine - coarse)) >= 1e-7:
        raise QuadratureUnstableError(
            f"expansion of {target!r} to degree {p} did not stabilize "
            f"under node doubling (max move {np.max(np.abs(fine - coarse)):.2e})"
        )
    # square-integrability check: Parseval mass must come out finite
    if not np.isfinite(np.sum(fine**2)):
        raise ValueError(f"{target!r} is not square-integrable under the Gaussian")
    nodes_used = 2 * quad_nodes if kink is None else len(x2)
    return HermiteSeries(coeffs=fine, degree=p, quad_nodes=nodes_used, target=target)


def expand_activation_deriv(spec, p, quad_nodes=400):
    """Hermite series of ``spec.f'``, splitting at the kink when there is one."""
    loc = None if spec.kink is None else spec.kink.location
    return hermite_expand(
        spec.df, p, quad_nodes=quad_nodes, kink=loc, target=f"{spec.name}'"
    )


def expand_activation(spec, p, quad_nodes=400):
    """Hermite series of ``spec.f`` itself (used by the depth recursion)."""
    loc = None if spec.kink is None else spec.kink.location
    return hermite_expand(
        spec.f, p, quad_nodes=quad_nodes, kink=loc, target=spec.name
    )


def relu_prime_hermite_closed_form(p):
    """Exact Hermite coefficients of the unit step (the relu derivative).

    ``c[0] = 1/2``; even coefficients of positive degree vanish; odd ones
    follow from the half-line Gaussian integrals, computed by the stable
    ratio recurrence
    ``c[2j+1] = -c[2j-1] (2j-1) / sqrt(2j (2j+1))`` with ``c[1] = 1/sqrt(2 pi)``.
    """
    if p < 0:
        raise ValueError("degree must be nonnegative")
    c = np.zeros(p + 1)
    c[0] = 0.5
    if p >= 1:
        r = 1.0 / np.sqrt(2.0 * np.pi)
        c[1] = r
        j = 1
        while 2 * j + 1 <= p:
            r = r * (-(2.0 * j - 1.0)) / np.sqrt(2.0 * j * (2.0 * j + 1.0))
            c[2 * j + 1] = r
            j += 1
    return HermiteSeries(coeffs=c, degree=p, quad_nodes=0, target="relu' (closed form)")


def tail_energy(series, cutoff):
    """Squared L2 error of the degree-``cutoff`` truncation, ``sum_{k>cutoff} c_k^2``."""
    if cutoff > series.degree:
        raise ValueError("cutoff exceeds the series degree")
    return float(np.sum(series.coeffs[cutoff + 1 :] ** 2))


def decay_slope(series, k_min, k_max):
    """Least-squares slope of ``log|c_k|`` against ``sqrt(2k+1)``.

    Coefficients below the quadrature noise floor are excluded; at least five
    usable points are required.
    """
    k = np.arange(series.degree + 1)
    mask = (k >= k_min) & (k <= k_max) & (np.abs(series.coeffs) > COEFF_FLOOR)
    if np.count_nonzero(mask) < 5:
        raise ValueError(
            f"only {np.count_nonzero(mask)} usable coefficients in "
            f"[{k_min}, {k_max}]; need at least 5"
        )
    ks = k[mask]
    A = np.column_stack([np.sqrt(2.0 * ks + 1.0), np.ones(ks.size)])
    slope, _ = np.linalg.lstsq(A, np.log(np.abs(series.coeffs[mask])), rcond=None)[0]
    return float(slope)


def r_function(series, rho):
    """Correlation transfer ``R(rho) = sum_a c_a^2 rho^a``.

    Equals ``E[f(v0) f(v1)]`` for ``rho``-correlated standard Gaussians when
    the series expands ``f``.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(np.abs(rho) > 1.0 + 1e-12):
        raise ValueError("correlation must lie in [-1, 1]")
    powers = np.power.outer(rho, np.arange(series.degree + 1))
    out = powers @ (series.coeffs**2)
    return float(out) if out.ndim == 0 else out
