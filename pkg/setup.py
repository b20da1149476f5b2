"""Build script for the optional compiled distance kernels.

The package works without the extension (a numpy/scipy fallback is selected
at import time), so any failure to build it is non-fatal.
"""

import numpy as np
from setuptools import setup, Extension

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "wsboost.kernels._core",
                ["src/wsboost/kernels/_core.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
