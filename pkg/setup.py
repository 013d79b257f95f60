"""Build script: compiles the optional nDCG extension when Cython is available.

The package works without the extension (a pure-Python fallback is selected
at import time), so a missing compiler or Cython must not fail the install.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/escirank/_kernels/_ndcg.pyx"],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
