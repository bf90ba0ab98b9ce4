"""Build the optional compiled kernel extension.

The package works without it: chainboost.kernels falls back to the pure
NumPy/Python implementation when the extension is missing. Compile with

    pip install -e . --no-build-isolation

or, for an in-tree build of just the extension:

    python setup.py build_ext --inplace
"""

from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension

    extensions = cythonize(
        [
            Extension(
                "chainboost._kernels_c",
                ["src/chainboost/_kernels_c.pyx"],
                # no -march/-ffast-math: the compiled kernels must produce
                # bit-identical results to the pure backend
                extra_compile_args=["-O2"],
            )
        ],
        compiler_directives={"language_level": 3},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
