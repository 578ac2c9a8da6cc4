"""Shallow network state: initialization, forward pass and gradients.

The network is ``F(x) = (c_phi / sqrt(m)) sum_k a_k phi(w_k^T x + b_k)``
with ``c_phi = 1`` in the shallow case.  Three initialization schemes are
supported; the variance table is

====== ============== ============== ==============
scheme  W              a              b
====== ============== ============== ==============
dzps    N(0, 1)        N(0, 1)        (none)
fanin   N(0, 1/d)      N(0, 1/m)      N(0, 0.01)
fanout  N(0, 1/m)      N(0, 1)        N(0, 1/m)
====== ============== ============== ==============
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from gramscope.data import substream

_STREAM_W = 11
_STREAM_A = 12
_STREAM_B = 13

SCHEMES = ("dzps", "fanin", "fanout")


@dataclass(frozen=True)
class NetworkState:
    """Weights of a one-hidden-layer network (possibly multi-output)."""

    W: np.ndarray  # m x d
    a: np.ndarray  # m, or m x C for multi-output
    b: Optional[np.ndarray]  # m, or None when unbiased
    scheme: str
    seed: int
    activation: str
    c_phi: float = 1.0

    @property
    def m(self):
        return self.W.shape[0]

    @property
    def dim(self):
        return self.W.shape[1]

    @property
    def n_outputs(self):
        return 1 if self.a.ndim == 1 else self.a.shape[1]

    def with_weights(self, W):
        return replace(self, W=W)


def init_net(scheme, m, d, seed, activation, n_outputs=1, c_phi=1.0):
    """Sample a network state; deterministic given the seed."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown initialization scheme {scheme!r}")
    if m < 1 or d < 1:
        raise ValueError("m and d must be positive")
    gen_w = substream(seed, _STREAM_W)
    gen_a = substream(seed, _STREAM_A)
    a_shape = (m,) if n_outputs == 1 else (m, n_outputs)
    if scheme == "dzps":
        W = gen_w.standard_normal((m, d))
        a = gen_a.standard_normal(a_shape)
        b = None
    elif scheme == "fanin":
        W = gen_w.standard_normal((m, d)) / np.sqrt(d)
        a = gen_a.standard_normal(a_shape) / np.sqrt(m)
        b = substream(seed, _STREAM_B).standard_normal(m) * 0.1
    else:  # fanout
        W = gen_w.standard_normal((m, d)) / np.sqrt(m)
        a = gen_a.standard_normal(a_shape)
        b = substream(seed, _STREAM_B).standard_normal(m) / np.sqrt(m)
    return NetworkState(
        W=W, a=a, b=b, scheme=scheme, seed=int(seed),
        activation=activation, c_phi=float(c_phi),
    )


def preactivations(net, X):
    """``Z[k, i] = w_k^T x_i (+ b_k)``."""
    Z = net.W @ X
    if net.b is not None:
        Z += net.b[:, None]
    return Z


def forward(net, data, spec):
    """Network outputs ``u_i = (c_phi / sqrt(m)) sum_k a_k phi(z_ki)``."""
    X = data.X if hasattr(data, "X") else np.asarray(data)
    if X.shape[0] != net.dim:
        raise ValueError(
            f"data dimension {X.shape[0]} does not match network dimension {net.dim}"
        )
    Z = preactivations(net, X)
    phi = spec.f(Z)
    return (net.c_phi / np.sqrt(net.m)) * (phi.T @ net.a)


def grad_W(net, data, y, spec, sample_weights=None):
    """Analytic hidden-layer gradient of the quadratic loss
    ``L = 1/2 sum_i (y_i - u_i)^2``.

    ``sample_weights`` rescales per-sample residuals (used by the
    subsampled-gradient update).
    """
    X = data.X if hasattr(data, "X") else np.asarray(data)
    if X.shape[0] != net.dim:
        raise ValueError("shape mismatch between data and network")
    Z = preactivations(net, X)
    r = (net.c_phi / np.sqrt(net.m)) * (spec.f(Z).T @ net.a) - np.asarray(y, dtype=float)
    if sample_weights is not None:
        r = r * sample_weights
    coeff = net.a[:, None] * spec.df(Z) * r[None, :]
    return (net.c_phi / np.sqrt(net.m)) * (coeff @ X.T)
