import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "pipeflow.fem._kernels_cy",
                ["src/pipeflow/fem/_kernels_cy.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # Pure-Python install: the numpy kernel backend is selected at import.
    ext_modules = []

setup(ext_modules=ext_modules)
