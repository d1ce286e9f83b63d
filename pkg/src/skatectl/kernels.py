"""Kernel backend selection.

The compiled extension is used when it imported cleanly; otherwise the
pure-Python fallback.  ``SKATECTL_BACKEND=python`` forces the fallback.
"""

from __future__ import annotations

import os

from skatectl import _pykernels as python_backend

try:
    from skatectl import _ckernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and os.environ.get("SKATECTL_BACKEND", "").lower() != "python":
    _impl = compiled_backend
    BACKEND = "cython"
else:
    _impl = python_backend
    BACKEND = "python"


def available_backends() -> dict:
    out = {"python": python_backend}
    if compiled_backend is not None:
        out["cython"] = compiled_backend
    return out


def run_gestures(t, src, val, cfg):
    return _impl.run_gestures(t, src, val, cfg)


def run_episode(ev_t, ev_k, length, half_width, obstacles, coins, turns, params, timeout_ms, record):
    return _impl.run_episode(ev_t, ev_k, length, half_width, obstacles, coins, turns, params, timeout_ms, record)
