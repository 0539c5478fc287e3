"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension (a NumPy fallback is
selected at import time); building it just makes the per-pixel warp and
median kernels faster. If Cython or a C compiler is unavailable the install
proceeds without the extension.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "glean.kernels._native",
                ["src/glean/kernels/_native.pyx"],
                include_dirs=[np.get_include()],
                # contraction off keeps float results identical to the
                # NumPy fallback, which evaluates the same expressions
                # without FMA
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
