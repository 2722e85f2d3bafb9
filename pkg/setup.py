"""Builds the optional compiled kernel extension.

The extension accelerates the raycast / shortest-path / action-planning
kernels. If the toolchain is unavailable the install still succeeds and the
package falls back to the pure-Python kernels at import time.
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible; warn and continue otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, etc.
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            f"warning: compiled kernels skipped ({exc}); "
            "eqasim will use the pure-Python fallback",
            file=sys.stderr,
        )


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("warning: Cython unavailable; compiled kernels skipped", file=sys.stderr)
        return []
    return cythonize(
        ["src/eqasim/_kernels/_core.pyx"],
        language_level="3",
    )


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
