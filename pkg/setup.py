import os

import numpy as np
from setuptools import Extension, setup

# FVKIT_NO_EXT=1 installs the pure-Python kernels only.
ext_modules = []
if os.environ.get("FVKIT_NO_EXT") != "1":
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "fvkit._kernels._ckernels",
                ["src/fvkit/_kernels/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )

setup(ext_modules=ext_modules)
