"""Builds the optional compiled kernel extension.

Set DECFL_NO_EXT=1 to skip compilation; the package then runs on the pure
numpy kernel backend selected automatically at import.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("DECFL_NO_EXT"):
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "decfl._kernels._core",
                ["src/decfl/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
