"""Builds the optional compiled search kernel.

The package works without it (a pure-Python kernel is selected at import
time), so a failed extension build must not fail the install.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext = Extension(
        "satlab._kernel._ckernel",
        ["src/satlab/_kernel/_ckernel.pyx"],
        extra_compile_args=["-O2"],
    )
    ext.optional = True
    ext_modules = cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
