"""Selects the compiled time-stepping kernel when it is built, else the numpy one.

Set DYAD_PURE_PYTHON=1 to force the numpy version.
"""
from __future__ import annotations

import os

from . import _shellkernel_py

BACKEND = "python"
run_ifrk4 = _shellkernel_py.run_ifrk4

if os.environ.get("DYAD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _shellkernel  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        run_ifrk4 = _shellkernel.run_ifrk4
        BACKEND = "cython"

python_run_ifrk4 = _shellkernel_py.run_ifrk4


def compiled_run_ifrk4():
    """The compiled kernel, or None when the extension is not built."""
    try:
        from . import _shellkernel  # type: ignore[attr-defined]
    except ImportError:
        return None
    return _shellkernel.run_ifrk4
