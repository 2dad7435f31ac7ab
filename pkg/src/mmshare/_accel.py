"""Backend selection for the numeric hot loops.

The analytical integrals and the Monte Carlo per-drop reductions each have
two implementations: scalar kernels compiled with numba, and a vectorized
pure-numpy path.  The numba path is used when numba imports and
``MMSHARE_DISABLE_NUMBA`` is not set to a truthy value.  ``MMSHARE_THREADS``
caps the worker count used by both.
"""

from __future__ import annotations

import contextlib
import os

_TRUTHY = {"1", "true", "yes", "on"}

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

NUMBA_DISABLED = os.environ.get("MMSHARE_DISABLE_NUMBA", "").strip().lower() in _TRUTHY

_active = "numba" if HAVE_NUMBA and not NUMBA_DISABLED else "numpy"


def thread_cap() -> int:
    raw = os.environ.get("MMSHARE_THREADS", "").strip()
    n = os.cpu_count() or 1
    if raw:
        try:
            n = max(1, min(n, int(raw)))
        except ValueError:
            pass
    return n


if HAVE_NUMBA and not NUMBA_DISABLED:
    # the TBB layer warns about version mismatches on some installs
    if os.environ.get("NUMBA_THREADING_LAYER") is None:
        numba.config.THREADING_LAYER = "workqueue"
    try:
        numba.set_num_threads(min(thread_cap(), numba.config.NUMBA_NUM_THREADS))
    except Exception:  # pragma: no cover
        pass


def available_backends() -> list[str]:
    return ["numba", "numpy"] if HAVE_NUMBA else ["numpy"]


def active_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _active = name


@contextlib.contextmanager
def use_backend(name: str):
    """Temporarily switch the kernel backend (tests and benchmarks)."""
    prev = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


def kernels():
    """Module implementing the analytical integrals for the active backend."""
    if _active == "numba":
        from . import _kernels_numba as k
    else:
        from . import _kernels_numpy as k
    return k
