"""Gradient Gram matrices and their spectra.

For the shallow network the matrix of interest has entries

``g_ij = (1/m) sum_k a_k^2 phi'(w_k^T x_i) phi'(w_k^T x_j) <x_i, x_j>``

and equals ``M^T M / m`` where column ``i`` of ``M`` stacks
``a_k phi'(w_k^T x_i) x_i`` over neurons.  As ``m`` grows it converges to
the kernel-limit matrix ``sum_a c_a^2(phi') (X^T X)^{o(a+1)}`` built from the
Hermite coefficients of the activation derivative.
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from gramscope import kernels
from gramscope.network import preactivations

KHATRI_RAO_GUARD = 10**7


@dataclass(frozen=True)
class FiniteM:
    m: int
    seed: int
    init_scheme: str


@dataclass(frozen=True)
class InfiniteM:
    hermite_order: int


@dataclass(frozen=True)
class OutputH:
    m: int
    seed: int


@dataclass(frozen=True)
class GramMatrix:
    values: np.ndarray
    provenance: Union[FiniteM, InfiniteM, OutputH]
    activation: str

    @property
    def n(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (descending), orthonormal eigenvectors, and residuals."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns
    residuals: np.ndarray

    @property
    def lam_min(self):
        return float(self.eigenvalues[-1])

    @property
    def lam_max(self):
        return float(self.eigenvalues[0])


def _check_shapes(data, net):
    if data.X.shape[0] != net.dim:
        raise ValueError(
            f"data dimension {data.X.shape[0]} does not match network "
            f"dimension {net.dim}"
        )


def build_M(data, net, spec):
    """The md x n matrix whose column i stacks ``a_k phi'(z_ki) x_i``."""
    _check_shapes(data, net)
    Z = preactivations(net, data.X)
    C = net.a[:, None] * spec.df(Z)  # m x n
    M3 = C[:, None, :] * data.X[None, :, :]  # m x d x n
    return M3.reshape(net.m * net.dim, data.n)


def build_G_finite(data, net, spec):
    """Finite-width Gram matrix ``(P^T P / m) o (X^T X)`` with
    ``P = a o phi'(W X)``; accumulation runs over fixed neuron chunks."""
    _check_shapes(data, net)
    Z = preactivations(net, data.X)
    P = spec.df(Z)
    P *= net.a[:, None]
    G = kernels.gram_accumulate(P) / net.m
    G *= data.X.T @ data.X
    return GramMatrix(
        values=G,
        provenance=FiniteM(m=net.m, seed=net.seed, init_scheme=net.scheme),
        activation=net.activation,
    )


def build_G_infinite(data, series, order, diag_moment=None):
    """Kernel-limit Gram matrix truncated at Hermite order ``order``.

    ``series`` must expand the activation derivative.  Off-diagonal entries
    are ``sum_{a<=order} c_a^2 (x_i^T x_j)^{a+1}``; the diagonal is set to
    the exact second moment ``E[phi'(z)^2]`` (by default the full Parseval
    mass of the series) so it carries no truncation error.
    """
    if order > series.degree:
        raise ValueError("truncation order exceeds the series degree")
    norms = np.linalg.norm(data.X, axis=0)
    if np.max(np.abs(norms - 1.0)) > 1e-10:
        raise ValueError("kernel-limit matrix requires unit-norm data columns")
    K = data.X.T @ data.X
    c2 = series.coeffs[: order + 1] ** 2
    G = np.zeros_like(K)
    Kpow = K.copy()
    for a in range(order + 1):
        if c2[a] != 0.0:
            G += c2[a] * Kpow
        Kpow = Kpow * K
    diag = series.parseval_mass() if diag_moment is None else float(diag_moment)
    np.fill_diagonal(G, diag)
    return GramMatrix(
        values=G, provenance=InfiniteM(hermite_order=order), activation=series.target
    )


def build_H_output(data, net, spec):
    """Output-layer Gram matrix ``h_ij = (1/m) sum_r phi(z_ri) phi(z_rj)``."""
    _check_shapes(data, net)
    phi = spec.f(preactivations(net, data.X))
    H = kernels.gram_accumulate(phi) / net.m
    return GramMatrix(
        values=H, provenance=OutputH(m=net.m, seed=net.seed), activation=net.activation
    )


def multiclass_G(data, net, spec):
    """Block Gram matrix of a C-output network, shape ``nC x nC``.

    Entry ``((i-1)C + q, (j-1)C + q')`` is
    ``(1/m) sum_k a_{kq} a_{kq'} phi'(z_ki) phi'(z_kj) <x_i, x_j>``;
    the diagonal blocks are the single-output matrices of the columns of the
    output weight matrix, and with one class the result reduces exactly to
    ``build_G_finite``.
    """
    _check_shapes(data, net)
    C = net.n_outputs
    A = net.a if net.a.ndim == 2 else net.a[:, None]
    n = data.n
    Z = preactivations(net, data.X)
    D = spec.df(Z)  # m x n
    K = data.X.T @ data.X
    G = np.zeros((n * C, n * C))
    for q in range(C):
        Pq = D * A[:, q][:, None]
        for qp in range(q, C):
            Pqp = D * A[:, qp][:, None] if qp != q else Pq
            block = (kernels.gram_accumulate_pair(Pq, Pqp) / net.m) * K
            G[q::C, qp::C] = block
            if qp != q:
                G[qp::C, q::C] = block.T
    return GramMatrix(
        values=G,
        provenance=FiniteM(m=net.m, seed=net.seed, init_scheme=net.scheme),
        activation=net.activation,
    )


def eigen_sym(G):
    """Full spectrum via cyclic Jacobi, eigenvalues sorted descending."""
    A = G.values if isinstance(G, GramMatrix) else np.asarray(G, dtype=float)
    A = 0.5 * (A + A.T)
    w, V, _ = kernels.jacobi_eigh(A, tol=1e-12, max_sweeps=100)
    w = w[::-1]
    V = V[:, ::-1]
    residuals = np.linalg.norm(A @ V - V * w[None, :], axis=0)
    return Spectrum(eigenvalues=w, eigenvectors=V, residuals=residuals)


def gershgorin_lower(G):
    """``min_i (g_ii - sum_{j != i} |g_ij|)``; never exceeds the least eigenvalue."""
    A = G.values if isinstance(G, GramMatrix) else np.asarray(G, dtype=float)
    radii = np.sum(np.abs(A), axis=1) - np.abs(np.diag(A))
    return float(np.min(np.diag(A) - radii))


def trace_ratio(G):
    A = G.values if isinstance(G, GramMatrix) else np.asarray(G, dtype=float)
    return float(np.trace(A) / A.shape[0])


def khatri_rao_power(X, p):
    """Column-wise ``p``-fold tensor power, flattened in row-major order."""
    X = np.asarray(X, dtype=float)
    d, n = X.shape
    if p < 1:
        raise ValueError("order must be at least 1")
    if d**p > KHATRI_RAO_GUARD:
        raise ValueError(
            f"d^p = {d**p} exceeds the memory guard {KHATRI_RAO_GUARD}"
        )
    K = X
    for _ in range(p - 1):
        K = (K[:, None, :] * X[None, :, :]).reshape(-1, n)
    return K


def hadamard_power(K, r):
    """Entrywise ``r``-th power."""
    return np.asarray(K, dtype=float) ** r


def dump_dense(matrix, path):
    """Write a matrix as plain-text dense rows (17 significant digits)."""
    A = matrix.values if isinstance(matrix, GramMatrix) else np.asarray(matrix)
    with open(path, "w", newline="\n") as fh:
        for row in np.atleast_2d(A):
            fh.write(" ".join(format(v, ".17g") for v in row) + "\n")


def min_sv_column_distance(A):
    """Column-distance lower bound for the least singular value.

    Returns ``(lower_bound, sigma_min)`` where the bound is
    ``min_i dist(a_i, span of the others) / sqrt(n)`` and ``sigma_min`` comes
    from the eigendecomposition of ``A^T A``.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[1]
    if n > 200:
        raise ValueError("column-distance scan is limited to 200 columns")
    dists = np.empty(n)
    for i in range(n):
        rest = np.delete(A, i, axis=1)
        coef, *_ = np.linalg.lstsq(rest, A[:, i], rcond=None)
        dists[i] = np.linalg.norm(A[:, i] - rest @ coef)
    w, _, _ = kernels.jacobi_eigh(A.T @ A)
    sigma_min = float(np.sqrt(max(w[0], 0.0)))
    return float(np.min(dists) / np.sqrt(n)), sigma_min
