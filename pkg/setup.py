"""Build script: compiles the hot-loop kernels when Cython and a C compiler
are available.  The package degrades to the pure-Python kernels otherwise,
so the extension is strictly optional.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    # -ffp-contract=off keeps the C arithmetic bit-identical to the
    # pure-Python fallback (no FMA contraction); do not add -ffast-math.
    ext_modules = cythonize(
        [
            Extension(
                "lqlab._core",
                ["src/lqlab/_core.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
