"""Build script for the optional compiled kernels.

The package works without them: ``xhho.kernels`` falls back to the pure
Python implementation when the extension is missing.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("XHHO_NO_EXTENSION"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "xhho._kernels",
                    ["src/xhho/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
