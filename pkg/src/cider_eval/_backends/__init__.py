"""Kernel backend selection.

Two interchangeable kernel modules exist: ``numba_kernels`` (JIT compiled,
the default) and ``numpy_kernels`` (pure numpy). The active one is chosen,
in order, by: an explicit :func:`use` call, the ``CIDER_EVAL_BACKEND``
environment variable (``numba`` or ``numpy``), then numba availability.
"""
from __future__ import annotations

import os
import warnings

from ..errors import InvalidArgumentError

ENV_VAR = "CIDER_EVAL_BACKEND"
_BACKENDS = ("numba", "numpy")
_active = None


def _import_backend(name: str):
    if name == "numba":
        from . import numba_kernels
        return numba_kernels
    if name == "numpy":
        from . import numpy_kernels
        return numpy_kernels
    raise InvalidArgumentError(f"unknown backend {name!r}; choose from {_BACKENDS}")


def use(name: str):
    """Select a backend for the rest of the process; returns the module."""
    global _active
    _active = _import_backend(name)
    return _active


def active():
    """The currently selected kernel module, resolving it on first use."""
    global _active
    if _active is None:
        requested = os.environ.get(ENV_VAR)
        if requested:
            _active = _import_backend(requested.strip().lower())
        else:
            try:
                _active = _import_backend("numba")
            except ImportError:
                warnings.warn("numba is unavailable; falling back to the "
                              "pure-numpy kernels", RuntimeWarning)
                _active = _import_backend("numpy")
    return _active
