"""Kernel backend selection: compiled extension if importable, numpy otherwise.

Env var D2S_BACKEND forces the choice: "compiled", "python", or "auto"
(default). Forcing "compiled" when the extension is absent is an error.
"""

from __future__ import annotations

import os

from . import _core_py

try:
    from . import _core as _core_cy  # compiled extension, optional
except ImportError:
    _core_cy = None

_active = None


def available_backends() -> list[str]:
    names = ["python"]
    if _core_cy is not None:
        names.insert(0, "compiled")
    return names


def _resolve(name: str):
    if name == "python":
        return _core_py
    if name == "compiled":
        if _core_cy is None:
            raise RuntimeError("compiled kernel extension is not available")
        return _core_cy
    if name == "auto":
        return _core_cy if _core_cy is not None else _core_py
    raise ValueError(f"unknown backend {name!r}")


def kernels():
    """The active kernel module."""
    global _active
    if _active is None:
        _active = _resolve(os.environ.get("D2S_BACKEND", "auto"))
    return _active


def set_backend(name: str) -> None:
    """Force a backend (tests and benchmarks)."""
    global _active
    _active = _resolve(name)


def active_name() -> str:
    return kernels().BACKEND_NAME
