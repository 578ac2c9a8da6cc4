"""Pure-NumPy implementations of the hot kernels.

These mirror the Cython twins in ``_ckernels.pyx`` operation for operation:
the cyclic Jacobi sweep order, the fixed chunk boundaries of the Gram
accumulator and the Hermite recurrence are identical, so both backends are
interchangeable.
"""

import numpy as np

#: fixed neuron-chunk size for the Gram accumulator; part of the contract
#: (results must not depend on how work would be split across threads).
GRAM_CHUNK = 16384


class JacobiConvergenceError(RuntimeError):
    """Raised when cyclic Jacobi fails to reach the off-diagonal target."""

    def __init__(self, sweeps, offdiag):
        super().__init__(
            f"Jacobi eigensolver did not converge after {sweeps} sweeps "
            f"(remaining off-diagonal Frobenius mass {offdiag:.3e})"
        )
        self.sweeps = sweeps
        self.offdiag = offdiag


def _offdiag_norm(B):
    return np.sqrt(max(0.0, np.sum(B * B) - np.sum(np.diag(B) ** 2)))


def jacobi_eigh(A, tol=1e-12, max_sweeps=100):
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi.

    Rotations are applied in fixed row-cyclic order, so the result is
    deterministic.  Converged when the off-diagonal Frobenius mass drops
    below ``tol`` times the Frobenius norm of the input.

    Returns ``(w, V, sweeps)`` with eigenvalues ``w`` ascending and
    eigenvector columns ``V[:, i]`` matching ``w[i]``.
    """
    B = np.array(A, dtype=np.float64, copy=True)
    n = B.shape[0]
    if B.shape != (n, n):
        raise ValueError("jacobi_eigh expects a square matrix")
    V = np.eye(n)
    fro = np.linalg.norm(B)
    if n == 1 or fro == 0.0:
        return np.diag(B).copy(), V, 0
    target = tol * fro
    sweeps = 0
    while _offdiag_norm(B) >= target:
        if sweeps >= max_sweeps:
            raise JacobiConvergenceError(sweeps, _offdiag_norm(B))
        # rotation skip threshold shrinks with the remaining mass
        thresh = _offdiag_norm(B) / (n * n)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = B[p, q]
                if abs(apq) <= min(thresh, target / (2.0 * n)):
                    continue
                theta = (B[q, q] - B[p, p]) / (2.0 * apq)
                t = np.sign(theta) if theta != 0 else 1.0
                t = t / (abs(theta) + np.sqrt(1.0 + theta * theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # rows/cols p and q of B
                bp = B[p, :].copy()
                bq = B[q, :].copy()
                B[p, :] = c * bp - s * bq
                B[q, :] = s * bp + c * bq
                bp = B[:, p].copy()
                bq = B[:, q].copy()
                B[:, p] = c * bp - s * bq
                B[:, q] = s * bp + c * bq
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
        sweeps += 1
    w = np.diag(B).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order], sweeps


def gram_accumulate(P, chunk=GRAM_CHUNK):
    """Accumulate ``P.T @ P`` over fixed row chunks with a pairwise reduction.

    ``P`` has one row per neuron; chunk boundaries are fixed so the result is
    independent of any parallel split of the neuron range.
    """
    P = np.ascontiguousarray(P, dtype=np.float64)
    m = P.shape[0]
    if m == 0:
        return np.zeros((P.shape[1], P.shape[1]))
    partials = [
        P[lo : min(lo + chunk, m)].T @ P[lo : min(lo + chunk, m)]
        for lo in range(0, m, chunk)
    ]
    while len(partials) > 1:
        merged = []
        for i in range(0, len(partials) - 1, 2):
            merged.append(partials[i] + partials[i + 1])
        if len(partials) % 2:
            merged.append(partials[-1])
        partials = merged
    return partials[0]


def gram_accumulate_pair(P, Q, chunk=GRAM_CHUNK):
    """``P.T @ Q`` with the same fixed-chunk pairwise reduction as
    :func:`gram_accumulate`."""
    P = np.ascontiguousarray(P, dtype=np.float64)
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    if P.shape[0] != Q.shape[0]:
        raise ValueError("row counts must match")
    m = P.shape[0]
    if m == 0:
        return np.zeros((P.shape[1], Q.shape[1]))
    partials = [
        P[lo : min(lo + chunk, m)].T @ Q[lo : min(lo + chunk, m)]
        for lo in range(0, m, chunk)
    ]
    while len(partials) > 1:
        merged = []
        for i in range(0, len(partials) - 1, 2):
            merged.append(partials[i] + partials[i + 1])
        if len(partials) % 2:
            merged.append(partials[-1])
        partials = merged
    return partials[0]


def hermite_design(x, p):
    """Orthonormal probabilists' Hermite design matrix.

    Row ``k`` holds ``He_k`` evaluated at the points ``x`` (``0 <= k <= p``),
    computed with the stable three-term recurrence
    ``He_{k+1} = (x He_k - sqrt(k) He_{k-1}) / sqrt(k+1)``.
    """
    x = np.asarray(x, dtype=np.float64)
    H = np.zeros((p + 1, x.size))
    H[0] = 1.0
    if p >= 1:
        H[1] = x
    for k in range(1, p):
        H[k + 1] = (x * H[k] - np.sqrt(k) * H[k - 1]) / np.sqrt(k + 1.0)
    return H
