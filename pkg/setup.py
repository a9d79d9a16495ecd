import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off: the compiled kernel must produce bit-identical floats to
# the numpy fallback, so the compiler must not fuse multiply-adds.
extensions = [
    Extension(
        "dormalloc._simplex_core",
        ["src/dormalloc/_simplex_core.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
