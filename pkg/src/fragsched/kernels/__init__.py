"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Set ``FRAGSCHED_DISABLE_NUMBA=1`` to force the numpy path.  The numba
path is also skipped when numba cannot be imported.
"""
import logging
import os

log = logging.getLogger(__name__)

ENV_FLAG = "FRAGSCHED_DISABLE_NUMBA"


def numba_disabled() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() not in ("", "0", "false", "no")


if numba_disabled():
    from . import _numpy as backend
else:
    try:
        from . import _numba as backend
    except ImportError:  # pragma: no cover - numba is a declared dependency
        log.warning("numba unavailable, using numpy kernels")
        from . import _numpy as backend

BACKEND = backend.NAME
simplex_iterate = backend.simplex_iterate
budget_dp = backend.budget_dp
exhaustive_best = backend.exhaustive_best


def get_backend(name: str):
    """Return the kernel module for ``name`` ("numba" or "numpy")."""
    if name == "numpy":
        from . import _numpy
        return _numpy
    if name == "numba":
        from . import _numba
        return _numba
    raise ValueError(f"unknown kernel backend {name!r}")
