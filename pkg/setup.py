import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("GREENGEO_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "greengeo.kernels._fast",
                    ["src/greengeo/kernels/_fast.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # pure-python fallback is selected at import time
        ext_modules = []

setup(ext_modules=ext_modules)
