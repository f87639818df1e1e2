"""Build script for the optional compiled trial kernel.

The package works without it: ``deckprob.mc.kernel`` falls back to the
pure-Python twin when ``deckprob.mc._ckernel`` cannot be imported.
Set ``DECKPROB_NO_EXT=1`` to skip the extension build.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("DECKPROB_NO_EXT"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "deckprob.mc._ckernel",
                    ["src/deckprob/mc/_ckernel.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
