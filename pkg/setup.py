import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "rdch.kernels._fast",
                ["src/rdch/kernels/_fast.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )
except ImportError:
    # The package falls back to the numpy kernels when the extension is absent.
    ext_modules = []

setup(ext_modules=ext_modules)
