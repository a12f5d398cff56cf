import os

from setuptools import setup

# The compiled kernels are optional: the package falls back to the pure-Python
# implementations in hlgkit._kernels_py when the extension is absent.
# Set HLGKIT_NO_EXT=1 to skip compilation entirely.
ext_modules = []
if os.environ.get("HLGKIT_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "hlgkit._kernels",
                    ["src/hlgkit/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
