"""Builds the optional Cython retrieval kernel.

The package works without it: fpbs.retrieval falls back to the pure-Python
implementation when the extension is missing or FPBS_PURE_PYTHON=1 is set.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "fpbs._retrieval_c",
                ["src/fpbs/_retrieval_c.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
