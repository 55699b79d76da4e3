"""Backend selection for the per-slot scheduling kernel.

The compiled extension is used when it was built (``pip install -e .``);
otherwise the pure-Python twin is imported. Both expose ``select_flows``,
``activate`` and ``decide`` with identical semantics.
"""
from __future__ import annotations

from types import ModuleType

from . import _pykernel

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None

_active: ModuleType = _ckernel if _ckernel is not None else _pykernel


def backend() -> ModuleType:
    return _active


def backend_name() -> str:
    return _active.NAME


def available() -> list[str]:
    return [m.NAME for m in (_ckernel, _pykernel) if m is not None]


def use_backend(name: str) -> ModuleType:
    """Switch backend globally ('cython' or 'python'); returns the module."""
    global _active
    if name == "python":
        _active = _pykernel
    elif name == "cython":
        if _ckernel is None:
            raise RuntimeError("compiled kernel not built; run `pip install -e .`")
        _active = _ckernel
    else:
        raise ValueError(f"unknown backend {name!r}")
    return _active


def get(name: str) -> ModuleType:
    if name == "python":
        return _pykernel
    if _ckernel is None:
        raise RuntimeError("compiled kernel not built")
    return _ckernel


__all__ = ["backend", "backend_name", "available", "use_backend", "get"]
