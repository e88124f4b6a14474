"""Build script: compiles the Monte-Carlo trial-loop extension when possible.

If Cython or a C compiler is unavailable the package still installs; the
pure-Python kernel with identical numerics is used instead.
"""

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/fbcap/_trialloop.pyx"],
        compiler_directives={"language_level": "3"},
    )
    include_dirs = [numpy.get_include()]
except ImportError:
    ext_modules = []
    include_dirs = []

setup(ext_modules=ext_modules, include_dirs=include_dirs)
