"""Selects the compiled kernels when available, numpy fallbacks otherwise.

SNLEVY_BACKEND=native forces the compiled extension (ImportError if missing),
SNLEVY_BACKEND=python forces the fallback, anything else picks automatically.
"""

import os

_requested = os.environ.get("SNLEVY_BACKEND", "auto").strip().lower()

if _requested in ("python", "py"):
    from . import _kernels_py as _impl
elif _requested == "native":
    from . import _native as _impl  # noqa: F401
else:
    try:
        from . import _native as _impl
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND_NAME
volterra_solve = _impl.volterra_solve
simulate_paths = _impl.simulate_paths


def get_kernels(backend: str | None = None):
    """Kernel pair for an explicit backend name ('native' or 'python')."""
    if backend in (None, "", "auto"):
        return volterra_solve, simulate_paths, BACKEND
    if backend in ("python", "py"):
        from . import _kernels_py as impl
    elif backend == "native":
        from . import _native as impl
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return impl.volterra_solve, impl.simulate_paths, impl.BACKEND_NAME
