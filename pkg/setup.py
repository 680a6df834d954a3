"""Build script for the optional compiled kernels.

The package works without the extension; ``sggmix._backend`` falls back to
the pure-Python kernels when ``sggmix._kernels`` cannot be imported.
"""
import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - build without Cython
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("SGGMIX_NO_EXT"):
    npyrandom = os.path.join(os.path.dirname(np.__file__), "random", "lib")
    ext = Extension(
        "sggmix._kernels",
        ["src/sggmix/_kernels.pyx"],
        include_dirs=[np.get_include()],
        library_dirs=[npyrandom],
        libraries=["npyrandom", "m"],
        # no -ffast-math: the fallback must reproduce these results bit for bit
        extra_compile_args=["-O2", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
