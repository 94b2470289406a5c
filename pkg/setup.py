"""Build script: compiles the optional Cython kernel extension.

The package is fully functional without the extension (a vectorized numpy
fallback ships alongside); any build failure therefore degrades gracefully
to a pure-Python install instead of aborting.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible; warn and continue otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - exercised only on broken toolchains
            sys.stderr.write(f"warning: extension build skipped ({exc}); "
                             "using the pure-Python kernel backend\n")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover
            sys.stderr.write(f"warning: building {ext.name} failed ({exc}); "
                             "using the pure-Python kernel backend\n")


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:  # pragma: no cover
        return []
    ext = Extension(
        "dictlab._kernels",
        sources=["src/dictlab/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
