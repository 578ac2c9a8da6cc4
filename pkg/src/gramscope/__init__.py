"""gramscope: gradient Gram matrix spectra of wide shallow networks.

Builds finite-width and kernel-limit Gram matrices for arbitrary activation
functions, quantifies how well activation derivatives are approximated by
Hermite and Chebyshev polynomials, and validates the resulting eigenvalue
and training-dynamics predictions against simulated gradient descent.
"""

__version__ = "0.1.0"

from gramscope.kernels import BACKEND as KERNEL_BACKEND

__all__ = ["KERNEL_BACKEND", "__version__"]
