"""Backend selection for the trajectory kernel.

``WEAKPROBE_BACKEND=numpy`` forces the pure-numpy path; the default is the
numba kernel, falling back to numpy when numba cannot be imported.
"""

import logging
import os

log = logging.getLogger(__name__)

BACKENDS = ("numba", "numpy")


def _requested() -> str:
    name = os.environ.get("WEAKPROBE_BACKEND", "numba").strip().lower()
    if name not in BACKENDS:
        log.warning("unknown WEAKPROBE_BACKEND=%r, using numba", name)
        return "numba"
    return name


def load(name: str):
    """Return the kernel module for ``name`` ('numba' or 'numpy')."""
    if name == "numba":
        from . import _kernels_numba
        return _kernels_numba
    if name == "numpy":
        from . import _kernels_numpy
        return _kernels_numpy
    raise ValueError(f"unknown backend {name!r}")


def _default():
    name = _requested()
    if name == "numba":
        try:
            return "numba", load("numba")
        except ImportError:
            log.warning("numba unavailable, using the numpy kernel")
    return "numpy", load("numpy")


BACKEND, kernels = _default()
