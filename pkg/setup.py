"""Build script: compiles the p-variation kernel when Cython is available.

The package works without the extension (a NumPy fallback is selected at
import time), so any compilation failure downgrades to a pure-Python
install instead of aborting.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/roughassim/_pvar_cy.pyx",
        language_level=3,
    )
    for ext in ext_modules:
        ext.include_dirs.append(numpy.get_include())
        ext.extra_compile_args = ["-O3"]
except ImportError:
    pass

setup(ext_modules=ext_modules)
