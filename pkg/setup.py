"""Build script.  The compiled kernel is optional: if Cython or a C compiler
is unavailable the package installs anyway and falls back to the pure
Python kernel at import time."""

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    extensions = cythonize(
        [
            Extension(
                "travflow._kernel",
                ["src/travflow/_kernel.pyx"],
                include_dirs=[numpy.get_include()],
                # fp-contract stays off so the compiled kernel matches
                # the pure Python backend bit for bit (no FMA fusion).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
