"""Backend switch for the compiled kernels.

Set ``NB_STEIN_NUMBA=0`` before import to run every kernel on its pure
numpy/scipy path. When numba is missing the numpy path is used silently.
"""
import os

_FLAG = os.environ.get("NB_STEIN_NUMBA", "1").strip().lower()

JIT_ENABLED = _FLAG not in {"0", "false", "off", "no"}

if JIT_ENABLED:
    try:
        import numba  # noqa: F401
    except ImportError:  # pragma: no cover - numba is a declared dependency
        JIT_ENABLED = False

if JIT_ENABLED:
    from numba import njit
else:

    def njit(func=None, **kwargs):
        if func is not None:
            return func

        def wrapper(f):
            return f

        return wrapper


def backend_name():
    return "numba" if JIT_ENABLED else "numpy"
