"""Build the compiled RK4 stepping kernel.

The extension is optional: if Cython or a C compiler is unavailable, the
package installs anyway and selects the pure-Python kernel at import time
(see ``poscon.kernel``).
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, etc.
            warnings.warn(f"compiled kernel skipped: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"compiled kernel skipped: {exc}")


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        warnings.warn(f"compiled kernel skipped: {exc}")
        return []
    return cythonize(
        [Extension("poscon._kernel", ["src/poscon/_kernel.pyx"],
                   include_dirs=[numpy.get_include()],
                   extra_compile_args=["-O3"],
                   define_macros=[("NPY_NO_DEPRECATED_API",
                                   "NPY_1_7_API_VERSION")])],
        language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
