"""Numerical core: jet arithmetic and the batched log-det kernel.

The compiled extension is preferred when importable; setting the
environment variable TZSOLITON_NO_EXT to a non-empty value other than "0"
forces the pure numpy fallback.  Both implementations are semantically
identical and are cross-checked in the test suite.
"""
from __future__ import annotations

import os

from . import jets  # noqa: F401  (re-exported submodule)
from .fallback import logdet_jets as _logdet_python

_impl = None
if os.environ.get("TZSOLITON_NO_EXT", "0") in ("", "0"):
    try:
        from . import _detcore as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = None


def backend_name() -> str:
    """Which log-det kernel is active: 'compiled' or 'python'."""
    return "compiled" if _impl is not None else "python"


def logdet_jets(mats):
    """Batched jet log det; dispatches to the active backend."""
    if _impl is not None:
        return _impl.logdet_jets(mats)
    return _logdet_python(mats)
