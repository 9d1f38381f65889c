"""Backend selection for the hot kernels.

Set ``ERASURE_LAB_BACKEND=numpy`` to force the pure-numpy path.  Without
numba installed the numpy path is used regardless.
"""

import os
import warnings

BACKEND_ENV = "ERASURE_LAB_BACKEND"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    numba = None
    HAVE_NUMBA = False


class PerformanceWarning(UserWarning):
    pass


def default_backend() -> str:
    want = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    if want not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {want!r}")
    if want == "numba" and not HAVE_NUMBA:
        warnings.warn("numba is not installed; using the numpy kernels", PerformanceWarning)
        return "numpy"
    return want


def resolve(backend: str | None) -> str:
    if backend is None:
        return default_backend()
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend


def njit(func):
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)
