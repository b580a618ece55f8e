"""Build script for the optional compiled walker kernel.

The package is pure Python apart from one hot loop (continuous-time walker
simulation).  If Cython or a C compiler is unavailable, or HEATLAB_NO_EXT is
set, the extension is skipped and the numpy fallback is used at import time.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("HEATLAB_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "heatlab._accel._ctrw",
                    sources=["src/heatlab/_accel/_ctrw.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
