"""Keccak-256 with backend selection at import time.

Prefers the compiled kernel (_keccak_cy) and falls back to the pure
Python implementation when the extension was not built. Set
AIDCHAIN_PURE_KECCAK=1 to force the fallback, e.g. for benchmarking.
"""

from __future__ import annotations

import os
from typing import Callable

from . import _keccak_py

keccak256: Callable[[bytes], bytes]

if os.environ.get("AIDCHAIN_PURE_KECCAK"):
    keccak256 = _keccak_py.keccak256
    BACKEND = "pure-python (forced)"
else:
    try:
        from . import _keccak_cy  # type: ignore[attr-defined]

        keccak256 = _keccak_cy.keccak256
        BACKEND = "cython"
    except ImportError:
        keccak256 = _keccak_py.keccak256
        BACKEND = "pure-python"
