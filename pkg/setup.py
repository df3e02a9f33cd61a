from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # No Cython: install pure-Python only; the package falls back to the
    # interpreted kernels at import time.
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "gatedcusum._kernel._core",
                ["src/gatedcusum/_kernel/_core.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
