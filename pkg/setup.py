"""Build script for the optional compiled walk kernel.

The extension is optional: when Cython or a C compiler is missing the
package installs without it and falls back to the NumPy implementation.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("HABITMINER_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "habitminer._walk_ext",
                    ["src/habitminer/_walk_ext.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
