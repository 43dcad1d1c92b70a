"""Build script: compiles the Cython kernel core when Cython is available.

The package works without the extension (numpy fallback selected at import);
the extension only speeds up the hot per-instance forward/backward loop.
"""

import os

from setuptools import setup
from setuptools.extension import Extension

import numpy as np

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None and os.path.exists("src/crossgraph/_kernels.pyx"):
    extensions = cythonize(
        [
            Extension(
                "crossgraph._kernels",
                ["src/crossgraph/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
else:
    extensions = []

setup(ext_modules=extensions)
