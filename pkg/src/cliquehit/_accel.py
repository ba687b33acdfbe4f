"""Numba switch for the hot kernels.

Set ``CLIQUEHIT_DISABLE_NUMBA=1`` before import to run every kernel as plain
Python/numpy.  Kernels are written in the numba-compatible subset so the two
paths execute the same source.
"""
import logging
import os

logger = logging.getLogger(__name__)

DISABLED = os.environ.get("CLIQUEHIT_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if DISABLED:
        raise ImportError("disabled by CLIQUEHIT_DISABLE_NUMBA")
    import numba

    def njit(*args, **kwargs):
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)

    ENABLED = True
except ImportError as exc:
    logger.debug("numba unavailable (%s); using the numpy path", exc)

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap

    ENABLED = False


def backend() -> str:
    return "numba" if ENABLED else "numpy"
