"""Build script: compiles the optional Cython kernel extension.

The extension accelerates the explicit-state kernels (random walk and
breadth-first enumeration).  If Cython, numpy, or a C compiler is
unavailable the install falls back to the pure-Python kernels; the package
is fully functional either way.
"""

import os
import sys

from setuptools import setup

PYX = "src/pnreach/kernels/_speed.pyx"

ext_modules = []
if os.path.exists(PYX):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "pnreach.kernels._speed",
                    [PYX],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError as exc:
        print(f"pnreach: building without compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
