"""Builds the optional Cython kernels; the package falls back to numpy without them."""
import numpy
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
                "pieceid._kernels",
                ["src/pieceid/_kernels.pyx"],
                include_dirs=[numpy.get_include(), "src/pieceid"],
                extra_compile_args=["-O3", "-march=native", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
