import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# The compiled kernel is optional: if the build fails the package falls back
# to the numpy implementation selected in flowcast.nn.backend.
# -ffast-math lets gcc vectorize the gate nonlinearities through libmvec;
# it reorders float ops, so the two backends agree to ~1e-12, not bitwise.
extensions = [
    Extension(
        "flowcast.nn._kernels",
        ["src/flowcast/nn/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-march=native", "-ffast-math"],
        libraries=["m"],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
