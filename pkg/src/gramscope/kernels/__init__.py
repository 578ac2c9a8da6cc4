"""Numeric hot-loop kernels with a compiled core and a NumPy fallback.

The Cython extension ``_ckernels`` is preferred for the interpreter-bound
kernels (the Jacobi rotation sweeps and the Hermite recurrence) when it was
built at install time; the chunked Gram accumulators always use the BLAS
path in ``_pykernels``, which outruns a scalar loop at any width (see
``benchmarks/bench_kernels.py``).  Both backends implement identical
algorithms with the same deterministic reduction order, so every caller is
agnostic to the selection; ``BACKEND`` records which core is active.
"""

try:
    from gramscope.kernels import _ckernels as _impl

    BACKEND = "cython"
except ImportError:  # extension not built; NumPy twin is always available
    from gramscope.kernels import _pykernels as _impl

    BACKEND = "numpy"

from gramscope.kernels import _pykernels

jacobi_eigh = _impl.jacobi_eigh
hermite_design = _impl.hermite_design
gram_accumulate = _pykernels.gram_accumulate
gram_accumulate_pair = _pykernels.gram_accumulate_pair

__all__ = [
    "BACKEND",
    "jacobi_eigh",
    "gram_accumulate",
    "gram_accumulate_pair",
    "hermite_design",
    "_pykernels",
]
