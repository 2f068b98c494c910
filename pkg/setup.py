import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "htcit._gramops",
                ["src/htcit/_gramops.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    # No Cython available: install the pure-Python package; the runtime
    # backend selector falls back to the numpy implementations.
    ext_modules = []

setup(ext_modules=ext_modules)
