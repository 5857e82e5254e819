import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from weq import kernels

masks = st.integers(min_value=0, max_value=(1 << kernels.MAX_BITS) - 1)


def _arrays(images, targets):
    return np.array(images, dtype=np.int64), np.array(targets, dtype=np.int64)


def reference(images, targets):
    for i, img in enumerate(images):
        if not any(t & ~img == 0 for t in targets):
            return i
    return -1


@given(st.lists(masks, max_size=20), st.lists(masks, max_size=20))
def test_backends_agree(images, targets):
    expect = reference(images, targets)
    im, tg = _arrays(images, targets)
    assert kernels.first_uncovered_py(images, targets) == expect
    assert kernels.first_uncovered_numpy(im, tg) == expect
    assert kernels.first_uncovered(im, tg) == expect


def test_edge_cases():
    im, tg = _arrays([0b11, 0b01], [0b11])
    assert kernels.first_uncovered(im, tg) == 1
    assert kernels.first_uncovered(*_arrays([], [1])) == -1
    assert kernels.first_uncovered_numpy(*_arrays([5], [])) == 0
    # the empty target set is contained in every image
    assert kernels.first_uncovered(*_arrays([0], [0])) == -1


def test_high_bit():
    top = 1 << (kernels.MAX_BITS - 1)
    im, tg = _arrays([top | 1, 1], [top])
    assert kernels.first_uncovered(im, tg) == 1
    assert kernels.first_uncovered_numpy(im, tg) == 1


@pytest.mark.parametrize("flag, backend", [("0", "numpy"), ("1", "numba")])
def test_env_flag_selects_backend(flag, backend):
    out = subprocess.run(
        [sys.executable, "-c", "from weq import kernels; print(kernels.BACKEND)"],
        env={**os.environ, "WEQ_NUMBA": flag}, capture_output=True, text=True, check=True,
    ).stdout.strip()
    assert out == backend
