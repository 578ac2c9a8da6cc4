"""Deep-network signal propagation: norm preservation and correlation decay.

Layer outputs follow ``x^(l) = (c_phi / sqrt(m)) phi(W^(l) x^(l-1))`` with
``c_phi = (E phi(z)^2)^{-1/2}``.  Pairwise correlations contract per layer
approximately like the normalized transfer map ``rho -> R(rho) / R(1)``,
which is dominated by the quadratic surrogate ``a rho + (1 - a) rho^2`` with
``a`` the degree-1 share of the activation's Hermite mass.

Square hidden-layer weight matrices are never materialized (at the scales of
interest one layer would take gigabytes).  Each weight matrix enters only
through ``W x^(l-1)``, and for i.i.d. standard Gaussian rows those
preactivations are i.i.d. ``N(0, K)`` vectors with ``K`` the Gram matrix of
the layer input; they are sampled directly in that ``n``-dimensional law
from counter-based substreams keyed by (seed, layer).
"""

from dataclasses import dataclass
from typing import List

import numpy as np

from gramscope.data import substream
from gramscope.hermite import r_function

_STREAM_DEEP = 31


class DepthPreconditionError(ValueError):
    """Activation does not satisfy phi(0) = 0 and E[phi] = 0."""


@dataclass
class DepthTrace:
    """Per-layer norms and normalized pairwise correlations (layer 0 = input)."""

    norms: np.ndarray  # (L+1) x n
    correlations: List[np.ndarray]  # per layer, n x n with unit diagonal

    @property
    def n_layers(self):
        return self.norms.shape[0] - 1

    def max_offdiag(self, layer):
        R = self.correlations[layer]
        n = R.shape[0]
        if n < 2:
            return 0.0
        off = ~np.eye(n, dtype=bool)
        return float(np.max(np.abs(R[off])))


def _check_depth_preconditions(spec, quad_nodes=400):
    f0 = float(np.asarray(spec.f(np.array([0.0]))).ravel()[0])
    if abs(f0) > 1e-10:
        raise DepthPreconditionError(
            f"{spec.name!r} has phi(0) = {f0:.3g}; depth propagation requires phi(0) = 0"
        )
    from gramscope.quadrature import gauss_hermite_prob

    x, w = gauss_hermite_prob(quad_nodes)
    mean = float(np.dot(w, spec.f(x)))
    if abs(mean) > 1e-8:
        raise DepthPreconditionError(
            f"{spec.name!r} has E[phi(z)] = {mean:.3g}; depth propagation "
            f"requires a centered activation"
        )


def _gram_factor(X):
    """Factor ``F`` with ``F F^T = X^T X`` (eigenvalue based, rank tolerant)."""
    K = X.T @ X
    K = 0.5 * (K + K.T)
    w, V = np.linalg.eigh(K)
    return V * np.sqrt(np.clip(w, 0.0, None))


def _layer_forward(X_prev, m, seed, layer, spec, c_phi):
    """One random layer: neuron preactivations ``w_k^T x_i`` are jointly
    ``N(0, K)`` across the inputs with ``K`` the input Gram matrix, so they
    are sampled directly as ``g_k^T F^T`` without forming the weights."""
    n = X_prev.shape[1]
    F = _gram_factor(X_prev)
    gen = substream(seed, _STREAM_DEEP, layer)
    Z = gen.standard_normal((m, n)) @ F.T
    return (c_phi / np.sqrt(m)) * spec.f(Z)


def _stats(X):
    norms = np.linalg.norm(X, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    R = (X.T @ X) / np.outer(safe, safe)
    np.fill_diagonal(R, 1.0)
    return norms, np.clip(R, -1.0, 1.0)


def depth_forward(data, spec, L, m, seed):
    """Propagate the dataset through ``L`` random layers and record per-layer
    norms and correlations.  ``L = 0`` returns the input statistics only."""
    _check_depth_preconditions(spec)
    if np.isnan(spec.c_phi_deep):
        raise DepthPreconditionError(f"{spec.name!r} has no usable normalization")
    X = data.X
    norms = [np.linalg.norm(X, axis=0)]
    corrs = [_stats(X)[1]]
    for layer in range(1, L + 1):
        X = _layer_forward(X, m, seed, layer, spec, spec.c_phi_deep)
        nrm, R = _stats(X)
        if np.any(nrm <= 0):
            raise RuntimeError(f"collapsed representation at layer {layer}")
        norms.append(nrm)
        corrs.append(R)
    return DepthTrace(norms=np.array(norms), correlations=corrs)


def correlation_map(series_phi, rho):
    """Normalized one-layer correlation update ``R(rho) / R(1)`` for the
    Hermite series of the activation itself."""
    r1 = r_function(series_phi, 1.0)
    if r1 <= 0:
        raise ValueError("series has no mass; cannot normalize")
    return r_function(series_phi, rho) / r1


def fixed_point_steps(a, rho0, eps, max_iter=100_000):
    """Iterate the contraction surrogate ``f(rho) = a rho + (1-a) rho^2``.

    Returns ``(steps, bound)``: the first iteration count at which the
    iterate drops to ``eps`` or below, and the reference bound
    ``(2 / (1 - a)) * max(log(1 / (1 - rho0)), log(1 / eps))`` with unit
    constants.
    """
    if not 0.0 < a < 1.0:
        raise ValueError("contraction parameter must lie in (0, 1)")
    if not 0.0 <= rho0 < 1.0:
        raise ValueError("starting correlation must lie in [0, 1)")
    if not 0.0 < eps < max(rho0, 1e-300):
        raise ValueError("target must lie in (0, rho0)")
    rho = rho0
    steps = 0
    while rho > eps:
        rho = a * rho + (1.0 - a) * rho * rho
        steps += 1
        if steps > max_iter:
            raise RuntimeError("fixed-point iteration did not reach the target")
    delta = 1.0 - rho0
    bound = (2.0 / (1.0 - a)) * max(np.log(1.0 / delta) if delta > 0 else 0.0,
                                    np.log(1.0 / eps))
    return steps, float(bound)


def depth_constant_c(series_phi):
    """Degree-1 share ``c_1^2 / sum_{a>=1} c_a^2`` of the activation's
    Hermite mass; the per-layer linear contraction factor."""
    c = series_phi.coeffs
    if abs(c[0]) > 1e-6:
        raise ValueError(
            "depth constant requires a centered activation (c_0 = 0); "
            f"got c_0 = {c[0]:.3g}"
        )
    denom = float(np.sum(c[1:] ** 2))
    if denom <= 1e-12:
        raise ValueError("activation has no Hermite mass above degree 0")
    val = float(c[1] ** 2) / denom
    return val
