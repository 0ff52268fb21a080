"""Build hook for the optional compiled keccak kernel.

The package is fully functional without the extension (a pure-Python
fallback is selected at import time); building it just makes hashing
roughly two orders of magnitude faster. Set AIDCHAIN_SKIP_EXT=1 to force
a pure-Python install.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("AIDCHAIN_SKIP_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/aidchain/crypto/_keccak_cy.pyx"],
            language_level=3,
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
