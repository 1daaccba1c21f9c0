"""Build script: compiles the optional Cython kernel core.

The package works without the extension (pure-numpy fallback selected at
import time), so a failed compile downgrades to a warning instead of
aborting the install.
"""

import sys

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    extensions = cythonize(
        [
            Extension(
                "gamebake.core.kernels._native",
                ["src/gamebake/core/kernels/_native.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": 3,
        },
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    print(f"gamebake: skipping native kernels ({exc})", file=sys.stderr)
    extensions = []

setup(ext_modules=extensions)
