"""Backend selection for the hot kernels.

Every kernel in :mod:`selinfer.kernels` exists twice: a loop-style version
compiled with numba and a vectorized pure-numpy version.  The active backend
is read from ``SELINFER_BACKEND`` (``numba`` or ``numpy``) at import time and
can be switched at runtime with :func:`use_backend`.  When numba is not
importable the numpy path is used regardless of the flag.
"""

import contextlib
import functools
import os

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    NUMBA_AVAILABLE = False

_VALID = ("numba", "numpy")


def _initial_backend():
    name = os.environ.get("SELINFER_BACKEND", "numba").strip().lower()
    if name not in _VALID:
        raise ValueError(f"SELINFER_BACKEND must be one of {_VALID}, got {name!r}")
    if name == "numba" and not NUMBA_AVAILABLE:
        return "numpy"
    return name


_backend = _initial_backend()


def get_backend():
    return _backend


def set_backend(name):
    global _backend
    if name not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}, got {name!r}")
    if name == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not importable")
    _backend = name


@contextlib.contextmanager
def use_backend(name):
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if NUMBA_AVAILABLE:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def dispatch(numba_impl, numpy_impl):
    """Build a function that forwards to the implementation of the active backend."""

    @functools.wraps(numpy_impl)
    def wrapper(*args, **kwargs):
        if _backend == "numba":
            return numba_impl(*args, **kwargs)
        return numpy_impl(*args, **kwargs)

    wrapper.numba_impl = numba_impl
    wrapper.numpy_impl = numpy_impl
    return wrapper
