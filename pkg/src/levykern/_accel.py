"""Numba toggle shared by the hot kernels.

``LEVYKERN_NO_NUMBA=1`` forces the pure-numpy paths. Otherwise
``LEVYKERN_BACKEND`` picks ``numba``, ``numpy`` or ``auto`` (default); auto
lets each kernel choose, see :func:`levykern.simulate.engine.pick_backend`.
``LEVYKERN_THREADS`` caps the numba worker count.
"""
from __future__ import annotations

import os

_FALSY = ("", "0", "false", "no", "off")


def _flag(name):
    return os.environ.get(name, "").strip().lower() not in _FALSY


try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _flag("LEVYKERN_NO_NUMBA")
BACKEND = os.environ.get("LEVYKERN_BACKEND", "auto").strip().lower() or "auto"
if BACKEND not in ("auto", "numba", "numpy"):
    BACKEND = "auto"
if not USE_NUMBA:
    BACKEND = "numpy"


def threads_from_env():
    """Worker count requested through LEVYKERN_THREADS, or None."""
    raw = os.environ.get("LEVYKERN_THREADS", "").strip()
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        return None
    return n if n >= 1 else None


if HAVE_NUMBA:
    # skip the TBB probe, which warns on older system TBB builds
    if "NUMBA_THREADING_LAYER" not in os.environ:
        numba.config.THREADING_LAYER = "workqueue"
    _n = threads_from_env()
    if _n is not None:
        numba.set_num_threads(min(_n, numba.config.NUMBA_NUM_THREADS))


def backend_name(use_numba) -> str:
    return "numba" if use_numba and HAVE_NUMBA else "numpy"


prange = numba.prange if HAVE_NUMBA else range


def njit(*args, **kwargs):
    """numba.njit when available, identity decorator otherwise."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn
