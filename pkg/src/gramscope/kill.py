"""Moment-system nullspace: coefficient vectors that annihilate polynomial
activation derivatives.

A unit vector ``zeta`` with ``sum_i zeta_i q(w^T x_i) x_i = 0`` for every
``w`` and every polynomial ``q`` of degree below ``p`` forces the Gram matrix
of such activations to be singular.  Expanding in monomials, the requirement
is the linear system ``sum_i zeta_i x_i^gamma = 0`` over all monomials
``gamma`` of total degree 1..p in the coordinates of the data span; the
system has ``C(d' + p, p) - 1`` equations, so a nullspace of dimension at
least ``n - (C(d' + p, p) - 1)`` exists whenever ``C(d' + p, p) < n + 1``.
For smooth non-polynomial activations the same vectors turn the truncation
tail into an upper bound on the lowest eigenvalues.
"""

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import comb

import numpy as np

from gramscope import kernels
from gramscope.activations import polynomial
from gramscope.data import span_basis
from gramscope.network import init_net, preactivations

NULLSPACE_RTOL = 1e-10
_PROBE_SEED = 0
_PROBE_WIDTH = 16


@dataclass(frozen=True)
class KillBasis:
    """Orthonormal vectors spanning the moment-system nullspace."""

    vectors: np.ndarray  # n x dim, orthonormal columns
    degree: int
    constraint_count: int
    residual: float  # max (1/sqrt(m)) ||M zeta|| on a probe polynomial net
    condition_ok: bool  # whether C(d'+p, p) < n+1 held

    @property
    def dim(self):
        return self.vectors.shape[1]


def monomial_exponents(n_vars, degree_min, degree_max):
    """Multi-indices of total degree in ``[degree_min, degree_max]``,
    graded-lexicographic, as an array of exponent rows."""
    out = []
    for deg in range(degree_min, degree_max + 1):
        for combo in combinations_with_replacement(range(n_vars), deg):
            e = np.zeros(n_vars, dtype=int)
            for v in combo:
                e[v] += 1
            out.append(e)
    return np.array(out, dtype=int).reshape(len(out), n_vars)


def monomial_matrix(coords, p):
    """Rows are monomial evaluations ``x_i^gamma`` for degrees 1..p."""
    exps = monomial_exponents(coords.shape[0], 1, p)
    rows = np.ones((exps.shape[0], coords.shape[1]))
    for r, e in enumerate(exps):
        for v, power in enumerate(e):
            if power:
                rows[r] *= coords[v] ** power
    return rows


def reduce_to_span(X):
    """Coordinates of the data in an orthonormal basis of its span."""
    U = span_basis(X)
    return U.T @ X


def max_feasible_degree(n, d_prime, cap=None):
    """Largest ``p`` with ``C(d' + p, p) < n + 1`` (0 when none exists)."""
    p = 0
    while comb(d_prime + p + 1, p + 1) < n + 1:
        p += 1
        if cap is not None and p >= cap:
            break
    return p


def _probe_residual(data, basis_vectors, degree):
    """Max ``(1/sqrt(m)) ||M zeta||`` on a small net whose activation
    derivative is a degree ``degree - 1`` polynomial (exactly killable)."""
    if basis_vectors.shape[1] == 0:
        return 0.0
    spec = polynomial(np.ones(max(degree, 1)), name="kill-probe")
    net = init_net("dzps", _PROBE_WIDTH, data.dim, _PROBE_SEED, spec.name)
    return kill_residual(data, net, basis_vectors, spec)


def kill_nullspace(data, p):
    """Orthonormal nullspace of the moment system at degree ``p``.

    The data is first reduced to its effective span.  When the counting
    condition fails the basis may be empty; that is flagged, not raised.
    """
    if p < 1:
        raise ValueError("degree must be at least 1")
    coords = reduce_to_span(data.X)
    d_prime = coords.shape[0]
    n = data.n
    A = monomial_matrix(coords, p)
    constraint_count = comb(d_prime + p, p) - 1
    assert A.shape[0] == constraint_count
    # candidate nullspace from the (small) normal matrix of the constraint
    # system; forming A^T A halves the attainable precision, so candidates
    # are polished against the row space before the final residual cut
    w, V, _ = kernels.jacobi_eigh(A.T @ A)
    sv = np.sqrt(np.maximum(w, 0.0))
    sv_max = sv[-1] if sv[-1] > 0 else 1.0
    cand = V[:, sv <= 1e-6 * sv_max]
    null_cols = np.zeros((n, 0))
    if cand.shape[1]:
        proj, *_ = np.linalg.lstsq(A.T, cand, rcond=None)
        polished = cand - A.T @ proj
        Q, R = np.linalg.qr(polished)
        keep = np.abs(np.diag(R)) > 0.5  # true null candidates keep unit length
        null_cols = Q[:, keep]
        ok = np.linalg.norm(A @ null_cols, axis=0) <= NULLSPACE_RTOL * sv_max
        null_cols = null_cols[:, ok]
    condition_ok = comb(d_prime + p, p) < n + 1
    return KillBasis(
        vectors=null_cols,
        degree=p,
        constraint_count=constraint_count,
        residual=_probe_residual(data, null_cols, p),
        condition_ok=condition_ok,
    )


def kill_residual(data, net, vectors, spec):
    """``max_zeta (1/sqrt(m)) ||M zeta||`` over the given unit vectors.

    Any unit vector upper-bounds ``sqrt(lambda_min(G))`` this way; vectors
    from :func:`kill_nullspace` make the value small for activations whose
    derivative is close to a low-degree polynomial.
    """
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim == 1:
        vectors = vectors[:, None]
    if vectors.shape[1] == 0:
        raise ValueError("empty basis: no vectors to evaluate")
    E = spec.df(preactivations(net, data.X))  # m x n
    worst = 0.0
    for j in range(vectors.shape[1]):
        B = (E * vectors[:, j][None, :]) @ data.X.T  # m x d
        val = np.sqrt(np.sum(net.a**2 * np.sum(B * B, axis=1)) / net.m)
        worst = max(worst, float(val))
    return worst


def kill_residual_smooth(data, net, basis, spec):
    """Residual of the kill basis under the true (non-polynomial) activation."""
    return kill_residual(data, net, basis.vectors, spec)
