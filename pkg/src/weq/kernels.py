"""Hot loop of the decider: does every clique image contain a target clique?

Vertex sets are bitmasks.  Two interchangeable back ends are provided:

* a numba ``@njit`` loop (default when numba imports), and
* a vectorised pure-numpy version.

Set ``WEQ_NUMBA=0`` to force the numpy path.  Masks wider than 63 bits fall
back to plain Python integers regardless of the flag.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["first_uncovered", "first_uncovered_numpy", "first_uncovered_py", "BACKEND", "MAX_BITS"]

MAX_BITS = 63


def first_uncovered_numpy(images: np.ndarray, targets: np.ndarray) -> int:
    """Index of the first image containing no target, or -1."""
    if images.size == 0:
        return -1
    if targets.size == 0:
        return 0
    ok = ((targets[None, :] & ~images[:, None]) == 0).any(axis=1)
    bad = np.flatnonzero(~ok)
    return int(bad[0]) if bad.size else -1


def first_uncovered_py(images, targets) -> int:
    for i, img in enumerate(images):
        miss = ~img
        for c in targets:
            if not c & miss:
                break
        else:
            return i
    return -1


_use_numba = os.environ.get("WEQ_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")

if _use_numba:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _use_numba = False

if _use_numba:

    @njit(cache=True, nogil=True)
    def _first_uncovered_nb(images, targets):
        for i in range(images.shape[0]):
            miss = ~images[i]
            found = False
            for j in range(targets.shape[0]):
                if targets[j] & miss == 0:
                    found = True
                    break
            if not found:
                return i
        return -1

    def first_uncovered(images: np.ndarray, targets: np.ndarray) -> int:
        return int(_first_uncovered_nb(images, targets))

    BACKEND = "numba"
else:
    first_uncovered = first_uncovered_numpy
    BACKEND = "numpy"
