"""Fast convolution kernels against the nested-loop references"""

import numpy as np
import pytest

from advsyn.core import ops


def _random_case(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    c_in = int(rng.integers(1, 9))
    c_out = int(rng.integers(1, 9))
    kernel = int(rng.integers(1, 5))
    stride = int(rng.integers(1, 4))
    padding = int(rng.integers(0, 3))
    size = int(rng.integers(max(kernel, 2), 17))
    return rng, n, c_in, c_out, kernel, stride, padding, size


@pytest.mark.parametrize('seed', range(100))
def test_conv2d_matches_reference(seed):
    rng, n, c_in, c_out, kernel, stride, padding, size = _random_case(seed)
    x = rng.normal(size=(n, c_in, size, size))
    w = rng.normal(size=(c_out, c_in, kernel, kernel))
    b = rng.normal(size=c_out)

    fast = ops.conv2d(x, w, b, stride, padding).data
    np.testing.assert_allclose(fast, ops.conv2d_reference(x, w, b, stride, padding), rtol=0, atol=1e-12)


@pytest.mark.parametrize('seed', range(100))
def test_conv2d_transpose_matches_reference(seed):
    rng, n, c_in, c_out, kernel, stride, padding, size = _random_case(seed)
    stride = min(stride, kernel)
    size = min(size, 8)
    padding = min(padding, ((size - 1) * stride + kernel - 1) // 2)
    x = rng.normal(size=(n, c_in, size, size))
    w = rng.normal(size=(c_in, c_out, kernel, kernel))
    b = rng.normal(size=c_out)

    fast = ops.conv2d_transpose(x, w, b, stride, padding).data
    np.testing.assert_allclose(fast, ops.conv2d_transpose_reference(x, w, b, stride, padding), rtol=0, atol=1e-12)
