import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "tailrate._ckernels",
                ["src/tailrate/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3", "embedsignature": True},
    )
except ImportError:
    # no Cython: the package falls back to tailrate._kernels_py at import
    extensions = []

setup(ext_modules=extensions)
