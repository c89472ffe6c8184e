"""Build script: compiles the optional Cython Schur-accumulation kernel.

The package works without the extension (a NumPy fallback is selected at
import time); building it makes the largest benchmark solves several times
faster.
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

ext_modules = [
    Extension(
        "cpolyopt.kernels._schur",
        sources=["src/cpolyopt/kernels/_schur.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(
        ext_modules,
        compiler_directives={"language_level": 3, "embedsignature": True},
    )
)
