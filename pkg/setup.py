import os

import numpy
from setuptools import Extension, setup

# The compiled kernels are optional: set GATEFORGE_SKIP_EXT=1 to install the
# pure-numpy fallback only (gateforge.kernels selects the backend at import).
ext_modules = []
if not os.environ.get("GATEFORGE_SKIP_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "gateforge.kernels._core",
                    ["src/gateforge/kernels/_core.pyx"],
                    include_dirs=[numpy.get_include()],
                    # -ffp-contract=off keeps float results reproducible
                    # against the numpy fallback (no FMA contraction).
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
