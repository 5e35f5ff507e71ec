"""JIT selection.

Hot kernels are written as plain scalar Python so they run unchanged with or
without numba. Set ``AEPLATOON_DISABLE_JIT=1`` to force the interpreted path.
"""
import os

_flag = os.environ.get("AEPLATOON_DISABLE_JIT", "").strip().lower()
DISABLED_BY_ENV = _flag not in ("", "0", "false", "no")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

JIT_ENABLED = numba is not None and not DISABLED_BY_ENV


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, otherwise an identity decorator."""
    if JIT_ENABLED:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(fn):
        return fn

    return wrap
