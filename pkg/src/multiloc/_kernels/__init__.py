"""Hot-kernel dispatch.

Kernels come from ``numba_backend`` unless the ``MULTILOC_DISABLE_NUMBA``
environment variable is set to a non-empty value other than ``0``, or numba
cannot be imported; then the pure-numpy twins in ``numpy_backend`` are used.
The choice is made once at import time.
"""

from __future__ import annotations

import os

from . import numpy_backend


def _want_numba() -> bool:
    flag = os.environ.get("MULTILOC_DISABLE_NUMBA", "").strip().lower()
    return flag in ("", "0", "false", "no")


backend = numpy_backend
if _want_numba():
    try:
        from . import numba_backend as backend  # noqa: F811
    except ImportError:  # pragma: no cover - numba is optional
        backend = numpy_backend

BACKEND = backend.NAME

frac_delay_add = backend.frac_delay_add
channel_response = backend.channel_response
ransac_tdoa = backend.ransac_tdoa
refine_tdoa = backend.refine_tdoa
rts_smooth = backend.rts_smooth


def set_threads(n: int | None) -> None:
    """Cap numba worker threads (no-op on the numpy backend)."""
    if n is None or BACKEND != "numba":
        return
    import numba

    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))

__all__ = [
    "BACKEND",
    "channel_response",
    "frac_delay_add",
    "ransac_tdoa",
    "refine_tdoa",
    "rts_smooth",
    "set_threads",
]
