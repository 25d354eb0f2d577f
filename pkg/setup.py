import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

compile_args = ["-O3"]
link_args = []
if os.environ.get("VLEB_NO_OPENMP", "") in ("", "0"):
    compile_args.append("-fopenmp")
    link_args.append("-fopenmp")

ext = Extension(
    "vlebesgue._kernels",
    ["src/vlebesgue/_kernels.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=compile_args,
    extra_link_args=link_args,
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(ext_modules=cythonize([ext], language_level=3))
