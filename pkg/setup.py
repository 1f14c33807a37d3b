import os

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

np_random_lib = os.path.join(os.path.dirname(numpy.__file__), "random", "lib")

ext_modules = [
    Extension(
        "fuzzymon._kernels._speedups",
        sources=["src/fuzzymon/_kernels/_speedups.pyx"],
        extra_compile_args=["-O3"],
        include_dirs=[numpy.get_include()],
        library_dirs=[np_random_lib],
        libraries=["npyrandom"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(ext_modules, language_level=3))
