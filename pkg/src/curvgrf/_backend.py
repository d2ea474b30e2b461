"""Kernel backend selection.

Hot kernels exist twice: a numba ``@njit`` loop and a vectorised numpy
version.  ``CURVGRF_NUMBA=0`` (or a missing numba install) selects numpy.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_OFF = {"0", "false", "no", "off"}

NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("CURVGRF_NUMBA", "1").strip().lower() not in _OFF


def njit(fn):
    """``numba.njit`` with caching and the GIL released; identity without numba."""
    if not NUMBA_AVAILABLE:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def resolve(backend):
    """Map ``None | "numba" | "numpy"`` to a concrete backend name."""
    if backend is None:
        return "numba" if USE_NUMBA else "numpy"
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


def resolve_threads(threads=None):
    """Worker count: explicit argument, then ``CURVGRF_THREADS``, then the core count."""
    if threads is None:
        env = os.environ.get("CURVGRF_THREADS")
        if env:
            threads = int(env)
    if threads is None:
        threads = os.cpu_count() or 1
    threads = int(threads)
    if threads < 1:
        raise ValueError("thread count must be at least 1")
    return threads
