"""Build script: compiles the optional fast kernel core.

The package works without the extension (a numpy fallback is selected at
import time); building it just makes kernel tables several times faster.
"""

from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "spinbath._core",
        ["src/spinbath/_core.pyx"],
        extra_compile_args=["-O3"],
    )
]

setup(ext_modules=cythonize(extensions, language_level="3"))
