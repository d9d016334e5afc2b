import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "green_noma.kernels._core",
                ["src/green_noma/kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # Pure-python fallback in green_noma.kernels is used when the
    # extension is absent, so the package still works without Cython.
    extensions = []

setup(ext_modules=extensions)
