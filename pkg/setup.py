import os

from setuptools import Extension, setup

# The compiled kernel module is an accelerator, not a requirement: if Cython
# or a C compiler is missing the install must still succeed and the package
# falls back to the numpy kernels at import time.
ext_modules = []
if os.environ.get("DISRANK_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext = Extension(
            "disrank.backend._kernels",
            sources=["src/disrank/backend/_kernels.pyx"],
            extra_compile_args=["-O3"],
            optional=True,
        )
        ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
