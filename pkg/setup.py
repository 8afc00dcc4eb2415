"""Build script: compiles the optional Cython core if a toolchain is present.

The package is fully functional without the extension (a pure numpy
fallback is selected at import time), so any failure here downgrades to
a warning instead of aborting the install.
"""
import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


def make_extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        warnings.warn("Cython not available; building without the compiled core")
        return []
    from setuptools import Extension

    ext = Extension(
        "tzsoliton.core._detcore",
        sources=["src/tzsoliton/core/_detcore.pyx"],
    )
    return cythonize([ext], language_level=3)


class OptionalBuildExt(build_ext):
    """build_ext that tolerates a missing or broken C toolchain."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any build failure is non-fatal
            warnings.warn(f"compiled core skipped ({exc}); pure-Python fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            warnings.warn(f"compiled core skipped ({exc}); pure-Python fallback will be used")


setup(
    ext_modules=make_extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
