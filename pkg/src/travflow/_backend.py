"""Kernel backend selection.

The compiled extension is preferred; the pure Python twin is the
fallback.  TRAVFLOW_BACKEND=python or =compiled forces the choice,
and set_backend() flips it at runtime for tests and benchmarks.
"""

from __future__ import annotations

import os

from .errors import TravflowError
from . import _kernel_py

kernel = None
name = ""


def _load_compiled():
    from . import _kernel
    return _kernel


def set_backend(which):
    """Pick the kernel at runtime; None reselects the default."""
    global kernel, name
    if which is None:
        _initialize()
        return kernel
    if which == "python":
        kernel = _kernel_py
    elif which == "compiled":
        kernel = _load_compiled()
    else:
        raise TravflowError(f"unknown backend {which!r}")
    name = which
    return kernel


def _initialize():
    forced = os.environ.get("TRAVFLOW_BACKEND", "")
    if forced:
        set_backend(forced)
        return
    try:
        set_backend("compiled")
    except ImportError:
        set_backend("python")


_initialize()
