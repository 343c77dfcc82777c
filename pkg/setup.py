"""Build hook for the optional Cython scheduling kernel.

The package works without it; ``thpsim._kernels`` falls back to numpy.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "thpsim._kernels._greedy",
                ["src/thpsim/_kernels/_greedy.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
