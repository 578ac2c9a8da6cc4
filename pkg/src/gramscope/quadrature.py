"""Quadrature rules for expectations under the standard Gaussian.

Gauss-Hermite nodes are tabulated for the physicists' weight ``exp(-x^2)``;
rescaling the nodes by ``sqrt(2)`` and normalizing the weights turns them
into a rule for the standard normal probability measure, so one node table
serves both conventions.
"""

from functools import lru_cache

import numpy as np
from scipy.special import roots_hermite, roots_legendre


@lru_cache(maxsize=64)
def gauss_hermite_prob(n):
    """Nodes and weights integrating ``E[f(z)]`` for ``z ~ N(0, 1)``."""
    t, w = roots_hermite(n)
    return np.sqrt(2.0) * t, w / np.sqrt(np.pi)


@lru_cache(maxsize=16)
def _legendre(n):
    return roots_legendre(n)


def gaussian_split_nodes(split, half_range=13.0, panels=48, panel_order=16):
    """Composite Gauss-Legendre nodes for a Gaussian-weighted integrand that
    is only piecewise smooth at ``split``.

    Integrates over ``[split - half_range, split]`` and
    ``[split, split + half_range]`` separately so no panel straddles the
    discontinuity; the truncated Gaussian tails beyond ``half_range`` are
    negligible at double precision.  Returns nodes and weights that already
    include the standard normal density.
    """
    t, w = _legendre(panel_order)
    xs = []
    ws = []
    for lo, hi in ((split - half_range, split), (split, split + half_range)):
        edges = np.linspace(lo, hi, panels + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            xs.append(mid + half * t)
            ws.append(half * w)
    x = np.concatenate(xs)
    w_out = np.concatenate(ws) * np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
    return x, w_out
