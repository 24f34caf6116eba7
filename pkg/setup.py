import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension(
            "sharpefolio._ckernels",
            ["src/sharpefolio/_ckernels.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )],
        language_level=3,
    )
except ImportError:
    # pure-Python install still works; kernels.py falls back to NumPy
    ext_modules = []

setup(ext_modules=ext_modules)
