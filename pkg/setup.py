"""Build script: compiles the optional Cython kernel.

The package works without the extension (a numpy fallback is selected at
import time); set ARCBOUNDS_NO_EXTENSION=1 to skip compilation entirely.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("ARCBOUNDS_NO_EXTENSION") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "arcbounds.kernels._native",
                    ["src/arcbounds/kernels/_native.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level="3",
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
