"""Build the optional compiled kernel.

The package is fully functional without it: ``monocert.kernels`` falls
back to the numpy interpreter when ``monocert._ckernels`` is missing.
"""

from setuptools import setup
from setuptools.command.build_ext import build_ext

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "monocert._ckernels",
                ["src/monocert/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # no FMA contraction and no sin/cos -> sincos fusion: jet and value paths must round alike
                extra_compile_args=["-O3", "-ffp-contract=off", "-fno-builtin-sin", "-fno-builtin-cos"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: compiled kernel not built ({exc}); using numpy fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: failed to build {ext.name} ({exc}); using numpy fallback")


setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
