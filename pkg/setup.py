"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension; kernels fall back to
the NumPy implementations in ``gramscope.kernels._pykernels``.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "gramscope.kernels._ckernels",
                ["src/gramscope/kernels/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
