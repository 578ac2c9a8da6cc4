# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the NumPy kernels in ``_pykernels``.

Same sweep order, same chunk boundaries, same recurrences; only the inner
loops run in C.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

from gramscope.kernels._pykernels import GRAM_CHUNK, JacobiConvergenceError

cnp.import_array()


cdef double _offdiag_norm(double[:, ::1] B, Py_ssize_t n) noexcept:
    cdef double s = 0.0
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(n):
            if i != j:
                s += B[i, j] * B[i, j]
    return sqrt(s)


def jacobi_eigh(A, double tol=1e-12, int max_sweeps=100):
    """Cyclic Jacobi eigendecomposition; see the NumPy twin for semantics."""
    B_arr = np.array(A, dtype=np.float64, copy=True, order="C")
    cdef Py_ssize_t n = B_arr.shape[0]
    if B_arr.shape[0] != B_arr.shape[1]:
        raise ValueError("jacobi_eigh expects a square matrix")
    V_arr = np.eye(n)
    cdef double[:, ::1] B = B_arr
    cdef double[:, ::1] V = V_arr
    cdef double fro = np.linalg.norm(B_arr)
    if n == 1 or fro == 0.0:
        return np.diag(B_arr).copy(), V_arr, 0
    cdef double target = tol * fro
    cdef double off, thresh, skip, apq, theta, t, c, s, bp, bq
    cdef Py_ssize_t p, q, i
    cdef int sweeps = 0
    off = _offdiag_norm(B, n)
    while off >= target:
        if sweeps >= max_sweeps:
            raise JacobiConvergenceError(sweeps, off)
        thresh = off / (n * n)
        skip = target / (2.0 * n)
        if skip < thresh:
            thresh = skip
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = B[p, q]
                if fabs(apq) <= thresh:
                    continue
                theta = (B[q, q] - B[p, p]) / (2.0 * apq)
                if theta != 0.0:
                    t = (1.0 if theta > 0 else -1.0) / (fabs(theta) + sqrt(1.0 + theta * theta))
                else:
                    t = 1.0 / (fabs(theta) + sqrt(1.0 + theta * theta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                for i in range(n):
                    bp = B[p, i]
                    bq = B[q, i]
                    B[p, i] = c * bp - s * bq
                    B[q, i] = s * bp + c * bq
                for i in range(n):
                    bp = B[i, p]
                    bq = B[i, q]
                    B[i, p] = c * bp - s * bq
                    B[i, q] = s * bp + c * bq
                for i in range(n):
                    bp = V[i, p]
                    bq = V[i, q]
                    V[i, p] = c * bp - s * bq
                    V[i, q] = s * bp + c * bq
        sweeps += 1
        off = _offdiag_norm(B, n)
    w = np.diag(B_arr).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V_arr[:, order], sweeps


def gram_accumulate(P, Py_ssize_t chunk=GRAM_CHUNK):
    """``P.T @ P`` accumulated over fixed row chunks, pairwise-reduced."""
    P_arr = np.ascontiguousarray(P, dtype=np.float64)
    cdef Py_ssize_t m = P_arr.shape[0]
    cdef Py_ssize_t n = P_arr.shape[1]
    if m == 0:
        return np.zeros((n, n))
    cdef double[:, ::1] Pv = P_arr
    partials = []
    cdef Py_ssize_t lo, hi, k, i, j
    cdef double[:, ::1] G
    cdef double pik
    for lo in range(0, m, chunk):
        hi = lo + chunk
        if hi > m:
            hi = m
        G_arr = np.zeros((n, n))
        G = G_arr
        for k in range(lo, hi):
            for i in range(n):
                pik = Pv[k, i]
                if pik == 0.0:
                    continue
                for j in range(i, n):
                    G[i, j] += pik * Pv[k, j]
        for i in range(n):
            for j in range(i + 1, n):
                G[j, i] = G[i, j]
        partials.append(G_arr)
    while len(partials) > 1:
        merged = []
        for i in range(0, len(partials) - 1, 2):
            merged.append(partials[i] + partials[i + 1])
        if len(partials) % 2:
            merged.append(partials[len(partials) - 1])
        partials = merged
    return partials[0]


def gram_accumulate_pair(P, Q, Py_ssize_t chunk=GRAM_CHUNK):
    """``P.T @ Q`` with the same fixed-chunk pairwise reduction."""
    P_arr = np.ascontiguousarray(P, dtype=np.float64)
    Q_arr = np.ascontiguousarray(Q, dtype=np.float64)
    if P_arr.shape[0] != Q_arr.shape[0]:
        raise ValueError("row counts must match")
    cdef Py_ssize_t m = P_arr.shape[0]
    cdef Py_ssize_t np_ = P_arr.shape[1]
    cdef Py_ssize_t nq = Q_arr.shape[1]
    if m == 0:
        return np.zeros((np_, nq))
    cdef double[:, ::1] Pv = P_arr
    cdef double[:, ::1] Qv = Q_arr
    partials = []
    cdef Py_ssize_t lo, hi, k, i, j
    cdef double[:, ::1] G
    cdef double pik
    for lo in range(0, m, chunk):
        hi = lo + chunk
        if hi > m:
            hi = m
        G_arr = np.zeros((np_, nq))
        G = G_arr
        for k in range(lo, hi):
            for i in range(np_):
                pik = Pv[k, i]
                if pik == 0.0:
                    continue
                for j in range(nq):
                    G[i, j] += pik * Qv[k, j]
        partials.append(G_arr)
    while len(partials) > 1:
        merged = []
        for i in range(0, len(partials) - 1, 2):
            merged.append(partials[i] + partials[i + 1])
        if len(partials) % 2:
            merged.append(partials[len(partials) - 1])
        partials = merged
    return partials[0]


def hermite_design(x, Py_ssize_t p):
    """Orthonormal probabilists' Hermite design matrix (rows k = 0..p)."""
    x_arr = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t npts = x_arr.size
    H_arr = np.zeros((p + 1, npts))
    cdef double[:, ::1] H = H_arr
    cdef double[::1] xv = x_arr
    cdef Py_ssize_t k, i
    cdef double rk, rk1
    for i in range(npts):
        H[0, i] = 1.0
    if p >= 1:
        for i in range(npts):
            H[1, i] = xv[i]
    for k in range(1, p):
        rk = sqrt(<double> k)
        rk1 = 1.0 / sqrt(k + 1.0)
        for i in range(npts):
            H[k + 1, i] = (xv[i] * H[k, i] - rk * H[k - 1, i]) * rk1
    return H_arr
