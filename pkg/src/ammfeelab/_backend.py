"""Execution backend for the hot simulation kernels.

Every function decorated with :func:`kernel` is written once, in plain
scalar Python, and executed in one of two modes:

* ``numba`` -- compiled with ``numba.njit(cache=True, nogil=True)``
  (the default whenever numba imports cleanly), or
* ``numpy`` -- the same source interpreted directly, with no JIT.

The mode is chosen once at import time from the ``AMMFEELAB_BACKEND``
environment variable.  Both modes run the identical source through the
same libm, so simulation outputs are bit-identical across backends; the
``numpy`` mode exists as a dependency-light fallback and as a reference
for ``benchmarks/bench_backends.py``.
"""

from __future__ import annotations

import os

_requested = os.environ.get("AMMFEELAB_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"AMMFEELAB_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

if _requested == "numpy":
    _numba = None
else:
    try:
        import numba as _numba
    except ImportError:
        if _requested == "numba":
            raise
        _numba = None

BACKEND = "numba" if _numba is not None else "numpy"


def kernel(func):
    """JIT-compile a hot kernel, or leave it as plain Python."""
    if _numba is not None:
        return _numba.njit(cache=True, nogil=True)(func)
    return func


def backend_name() -> str:
    return BACKEND
