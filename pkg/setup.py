from setuptools import Extension, setup

import numpy as np

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "fracsep._engine",
                ["src/fracsep/_engine.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    # Pure-Python fallback engine is selected at import time when the
    # compiled module is absent.
    extensions = []

setup(ext_modules=extensions)
