"""Kernel backend selection.

The hot MLP forward/backward kernels exist twice: a Cython extension
(``hann._mlp_core``) and a pure-numpy fallback (``hann._mlp_numpy``).  The
compiled one is picked when importable; set ``HANN_BACKEND=python`` or
``HANN_BACKEND=compiled`` to force a choice.  ``benchmarks/bench_backends.py``
compares the two.
"""

from __future__ import annotations

import os

from . import _mlp_numpy


def _select():
    forced = os.environ.get("HANN_BACKEND", "").strip().lower()
    if forced == "python":
        return _mlp_numpy
    try:
        from . import _mlp_core
        return _mlp_core
    except ImportError:
        if forced == "compiled":
            raise
        return _mlp_numpy


_impl = _select()

BACKEND_NAME = _impl.BACKEND_NAME
mlp_forward = _impl.mlp_forward
mlp_backward = _impl.mlp_backward


def get_backend(name=None):
    """Kernel module for an explicit backend name (default: the selected
    one); exposes mlp_forward, mlp_backward and BACKEND_NAME."""
    if name is None:
        return _impl
    if name == "python":
        return _mlp_numpy
    if name == "compiled":
        from . import _mlp_core
        return _mlp_core
    raise ValueError(f"unknown backend {name!r}")
