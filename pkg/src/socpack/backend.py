"""Kernel backend selection: numba-compiled loops or pure-numpy fallback.

The default backend is numba when importable, else numpy. Set the environment
variable SOCPACK_BACKEND=numpy (or numba) to force one, or call set_backend()
at runtime (used by the equivalence tests and the benchmark).
"""

from __future__ import annotations

import os

_active: str | None = None


def _import_numba_kernels():
    from . import kernels_numba
    return kernels_numba


def _import_numpy_kernels():
    from . import kernels_numpy
    return kernels_numpy


def _detect_default() -> str:
    env = os.environ.get("SOCPACK_BACKEND", "").strip().lower()
    if env in ("numpy", "np"):
        return "numpy"
    if env in ("numba", "jit"):
        _import_numba_kernels()
        return "numba"
    if env:
        raise ValueError(f"SOCPACK_BACKEND must be 'numba' or 'numpy', got {env!r}")
    try:
        _import_numba_kernels()
        return "numba"
    except ImportError:
        return "numpy"


def active_backend() -> str:
    global _active
    if _active is None:
        _active = _detect_default()
    return _active


def set_backend(name: str) -> None:
    global _active
    name = name.strip().lower()
    if name == "numba":
        _import_numba_kernels()
    elif name != "numpy":
        raise ValueError(f"backend must be 'numba' or 'numpy', got {name!r}")
    _active = name


def kernels():
    """The active kernel module (flow_segment / rk4_step / z_flags / ocv_eval_one)."""
    if active_backend() == "numba":
        return _import_numba_kernels()
    return _import_numpy_kernels()
