"""Backend selection: numba-jitted kernels with a pure-numpy fallback.

The numba path is the default whenever numba imports; set the environment
variable ``LANEFLOW_NO_NUMBA=1`` (before import) to force the numpy path.
Tests and the benchmark can also swap paths at runtime with ``use()`` /
``using()``.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

from . import numpy_backend

_DISABLED = os.environ.get("LANEFLOW_NO_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("numba disabled via LANEFLOW_NO_NUMBA")
    from . import numba_backend
except ImportError:
    numba_backend = None

_active = numba_backend if numba_backend is not None else numpy_backend


def current():
    """The active backend module."""
    return _active


def backend_name() -> str:
    return _active.NAME


def available() -> list:
    names = ["numpy"]
    if numba_backend is not None:
        names.append("numba")
    return names


def use(name: str):
    """Switch the active backend ('numba' or 'numpy')."""
    global _active
    if name == "numpy":
        _active = numpy_backend
    elif name == "numba":
        if numba_backend is None:
            raise RuntimeError("numba backend unavailable (not installed or disabled)")
        _active = numba_backend
    else:
        raise ValueError(f"unknown backend {name!r}")
    return _active


@contextmanager
def using(name: str):
    """Temporarily switch backends (test helper)."""
    global _active
    previous = _active
    use(name)
    try:
        yield _active
    finally:
        _active = previous
