"""
Backend selection for the ray/mesh kernels.

The compiled extension is used when it imports; otherwise, or when
``BODYFUSE_PURE_PYTHON=1`` is set, the NumPy versions are used. ``BACKEND``
names the active one.
"""

from __future__ import annotations

import os

from . import _kernels_py

PYTHON_BACKEND = _kernels_py

if os.environ.get("BODYFUSE_PURE_PYTHON", "") not in ("", "0"):
    COMPILED_BACKEND = None
else:
    try:
        from . import _kernels as COMPILED_BACKEND  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        COMPILED_BACKEND = None

_active = COMPILED_BACKEND if COMPILED_BACKEND is not None else PYTHON_BACKEND
BACKEND = "compiled" if COMPILED_BACKEND is not None else "python"

segment_triangle_pairs = _active.segment_triangle_pairs
segment_mesh_los = _active.segment_mesh_los


def get_backend(name: str | None = None):
    """Module implementing the kernels: ``"compiled"``, ``"python"`` or the active one."""
    if name is None:
        return _active
    if name == "python":
        return PYTHON_BACKEND
    if name == "compiled":
        if COMPILED_BACKEND is None:
            raise ImportError("compiled kernels are not available")
        return COMPILED_BACKEND
    raise ValueError(f"unknown backend {name!r}")
