"""Build script: compiles the Dormand-Prince kernel extension when Cython
is available.  The package works without it (the pure-Python kernel is
selected at import time), so a missing compiler or Cython never fails the
install."""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension(
            "impulseduff._kernel._dp54_cy",
            ["src/impulseduff/_kernel/_dp54_cy.pyx"],
            extra_compile_args=["-O3"],
        )],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    print("Cython not found; installing with the pure-Python kernel only")

setup(ext_modules=ext_modules)
