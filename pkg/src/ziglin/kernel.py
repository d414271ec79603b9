"""Backend selection for the integration kernel.

The compiled extension is used when it imports; otherwise the pure-Python
kernel takes over.  ``ZIGLIN_BACKEND=python`` forces the fallback.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _pykernel

try:
    from . import _kernel as _ckernel
except ImportError:  # extension not built
    _ckernel = None

__all__ = ["available_backends", "get_backend", "default_backend"]


def available_backends() -> list[str]:
    return (["cython"] if _ckernel is not None else []) + ["python"]


def default_backend() -> str:
    forced = os.environ.get("ZIGLIN_BACKEND")
    if forced:
        return forced
    return "cython" if _ckernel is not None else "python"


def get_backend(name: str | None = None) -> ModuleType:
    name = name or default_backend()
    if name == "python":
        return _pykernel
    if name == "cython":
        if _ckernel is None:
            raise ImportError("the compiled kernel is not built; reinstall with Cython available")
        return _ckernel
    raise ValueError(f"unknown backend {name!r}")
