import math

import numpy as np
import pytest

from advsyn.core import ops
from advsyn.core.ops import BatchNormState
from advsyn.core.rng import Rng
from advsyn.core.tensor import Tensor
from advsyn.exceptions import ShapeError


def test_conv2d_hand_example():
    x = np.array([[[[1.0, 2.0], [3.0, 4.0]]]])
    kernel = np.array([[[[1.0, 0.0], [0.0, 1.0]]]])

    out = ops.conv2d(x, kernel, [0.0])
    np.testing.assert_array_equal(out.data, [[[[5.0]]]])


def test_conv2d_identity_kernel(np_rng):
    x = np_rng.normal(size=(2, 1, 5, 4))

    out = ops.conv2d(x, np.ones((1, 1, 1, 1)), [0.0])
    np.testing.assert_array_equal(out.data, x)


def test_conv2d_stride_two_shape():
    out = ops.conv2d(np.zeros((1, 1, 128, 128)), np.zeros((64, 1, 4, 4)), np.zeros(64), stride=2, padding=1)
    assert out.shape == (1, 64, 64, 64)


@pytest.mark.parametrize('x_shape,kernel_shape,bias_shape', [
    ((1, 2, 5, 5), (3, 1, 3, 3), (3,)),
    ((1, 1, 5, 5), (3, 1, 3, 3), (2,)),
    ((1, 1, 2, 2), (1, 1, 5, 5), (1,)),
    ((1, 5, 5), (1, 1, 3, 3), (1,)),
])
def test_conv2d_shape_errors(x_shape, kernel_shape, bias_shape):
    with pytest.raises(ShapeError):
        ops.conv2d(np.zeros(x_shape), np.zeros(kernel_shape), np.zeros(bias_shape))


def test_conv2d_rejects_zero_stride():
    with pytest.raises(ShapeError):
        ops.conv2d(np.zeros((1, 1, 4, 4)), np.zeros((1, 1, 2, 2)), np.zeros(1), stride=0)


def test_conv2d_transpose_hand_example():
    out = ops.conv2d_transpose(np.array([[[[2.0]]]]), np.array([[[[1.0, 2.0], [3.0, 4.0]]]]), [0.0], stride=2)
    np.testing.assert_array_equal(out.data, [[[[2.0, 4.0], [6.0, 8.0]]]])


def test_conv2d_transpose_doubles_resolution():
    out = ops.conv2d_transpose(np.zeros((1, 8, 32, 32)), np.zeros((8, 4, 4, 4)), np.zeros(4), stride=2, padding=1)
    assert out.shape == (1, 4, 64, 64)


@pytest.mark.parametrize('size', [4, 8, 32, 128])
def test_strided_conv_then_transpose_restores_spatial_dims(size):
    down = ops.conv2d(np.zeros((2, 1, size, size)), np.zeros((3, 1, 4, 4)), np.zeros(3), stride=2, padding=1)
    up = ops.conv2d_transpose(down, np.zeros((3, 1, 4, 4)), np.zeros(1), stride=2, padding=1)

    assert down.shape == (2, 3, size // 2, size // 2)
    assert up.shape == (2, 1, size, size)
    assert ops.conv_transpose_output_size(ops.conv_output_size(size, 4, 2, 1), 4, 2, 1) == size


def test_conv2d_transpose_zero_kernel_gives_bias(np_rng):
    out = ops.conv2d_transpose(np_rng.normal(size=(2, 3, 4, 4)), np.zeros((3, 2, 4, 4)), [0.5, -1.0], 2, 1)
    np.testing.assert_array_equal(out.data[:, 0], 0.5)
    np.testing.assert_array_equal(out.data[:, 1], -1.0)


def test_conv2d_transpose_rejects_kernel_below_stride():
    with pytest.raises(ShapeError):
        ops.conv2d_transpose(np.zeros((1, 1, 2, 2)), np.zeros((1, 1, 1, 1)), np.zeros(1), stride=2)


@pytest.mark.parametrize('x,weights,bias,expected', [
    ([[1.0, 2.0]], [[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0], [[1.0, 2.0]]),
    ([[1.0, 2.0]], [[3.0], [4.0]], [1.0], [[12.0]]),
    ([[0.0, 0.0]], [[3.0, 5.0], [4.0, 6.0]], [7.0, -1.0], [[7.0, -1.0]]),
])
def test_dense(x, weights, bias, expected):
    np.testing.assert_array_equal(ops.dense(x, weights, bias).data, expected)


def test_dense_inner_dimension_mismatch():
    with pytest.raises(ShapeError) as error:
        ops.dense(np.zeros((2, 3)), np.zeros((4, 1)), np.zeros(1))
    assert error.value.op == 'dense'


def test_activations():
    np.testing.assert_allclose(ops.leaky_relu([-1.0, 0.0, 3.0], 0.2).data, [-0.2, 0.0, 3.0])
    np.testing.assert_array_equal(ops.relu([-1.0, 0.0, 3.0]).data, [0.0, 0.0, 3.0])
    assert ops.tanh([0.0]).data[0] == 0.0
    assert ops.sigmoid([0.0]).data[0] == 0.5
    assert ops.sigmoid([math.log(3.0)]).data[0] == pytest.approx(0.75, abs=1e-15)


def test_activation_by_name():
    np.testing.assert_array_equal(ops.activation([-2.0], 'leaky_relu', 0.5).data, [-1.0])

    with pytest.raises(ValueError):
        ops.activation([1.0], 'softmax')
    with pytest.raises(ValueError):
        ops.leaky_relu([1.0], 1.5)


def test_maxpool_examples():
    np.testing.assert_array_equal(ops.maxpool2d(np.array([[[[1.0, 2.0], [3.0, 4.0]]]])).data, [[[[4.0]]]])

    ramp = np.arange(16.0).reshape(1, 1, 4, 4)
    np.testing.assert_array_equal(ops.maxpool2d(ramp, 2, 2).data, [[[[5.0, 7.0], [13.0, 15.0]]]])


def test_maxpool_tie_gradient_goes_to_first_element():
    from advsyn.core.tensor import Tape, backward

    x = Tensor(np.full((1, 1, 2, 2), 3.0), requires_grad=True)
    with Tape() as tape:
        loss = ops.sum(ops.maxpool2d(x))

    np.testing.assert_array_equal(backward(tape, loss)[x][0, 0], [[1.0, 0.0], [0.0, 0.0]])


def test_maxpool_drops_partial_windows():
    assert ops.maxpool2d(np.zeros((1, 1, 5, 5))).shape == (1, 1, 2, 2)

    with pytest.raises(ShapeError):
        ops.maxpool2d(np.zeros((1, 1, 1, 1)))


def test_global_avg_pool():
    assert ops.global_avg_pool(np.array([[[[1.0, 2.0], [3.0, 4.0]]]])).data[0, 0] == 2.5

    x = np.stack([np.zeros((3, 3)), np.ones((3, 3))])[None]
    np.testing.assert_array_equal(ops.global_avg_pool(x).data, [[0.0, 1.0]])


def test_batchnorm_train_normalizes_batch():
    x = np.array([3.0, 7.0, 3.0, 7.0]).reshape(4, 1, 1, 1)
    state = BatchNormState(1)

    out = ops.batchnorm(x, [1.0], [0.0], state, 'train')
    np.testing.assert_allclose(out.data.reshape(-1), (x.reshape(-1) - 5.0) / math.sqrt(4.0 + 1e-5), rtol=0, atol=1e-15)
    np.testing.assert_allclose(state.mean, [0.5])
    np.testing.assert_allclose(state.var, [0.9 + 0.4])


def test_batchnorm_zero_gamma_gives_beta(np_rng):
    out = ops.batchnorm(np_rng.normal(size=(3, 2, 2, 2)), [0.0, 0.0], [1.5, -2.0], BatchNormState(2), 'train')
    np.testing.assert_array_equal(out.data[:, 0], 1.5)
    np.testing.assert_array_equal(out.data[:, 1], -2.0)


def test_batchnorm_infer_with_identity_stats(np_rng):
    x = np_rng.normal(size=(2, 3, 2, 2))
    state = BatchNormState(3)

    out = ops.batchnorm(x, np.ones(3), np.zeros(3), state, 'infer')
    np.testing.assert_allclose(out.data, x / math.sqrt(1.0 + 1e-5))
    np.testing.assert_array_equal(state.mean, np.zeros(3))


def test_batchnorm_errors():
    with pytest.raises(ValueError):
        ops.batchnorm(np.zeros((1, 1, 1, 1)), [1.0], [0.0], BatchNormState(1), 'eval')
    with pytest.raises(ShapeError):
        ops.batchnorm(np.zeros((0, 1, 2, 2)), [1.0], [0.0], BatchNormState(1))
    with pytest.raises(ShapeError):
        ops.batchnorm(np.zeros((1, 2, 2, 2)), [1.0], [0.0], BatchNormState(2))


@pytest.mark.parametrize('rate,mode', [
    (0.0, 'train'),
    (0.0, 'infer'),
    (0.5, 'infer'),
])
def test_dropout_identity(rate, mode, np_rng):
    x = Tensor(np_rng.normal(size=(3, 4)))
    assert ops.dropout(x, rate, Rng(0, 'dropout'), mode) is x


def test_dropout_preserves_expectation():
    x = np.full((100, 100), 2.0)

    out = ops.dropout(x, 0.5, Rng(9, 'dropout'), 'train').data
    assert set(np.unique(out)) <= {0.0, 4.0}
    assert out.mean() == pytest.approx(2.0, abs=0.1)


def test_dropout_rejects_rate_one():
    with pytest.raises(ValueError):
        ops.dropout([1.0], 1.0, Rng(0))


def test_reshape_and_flatten():
    x = np.arange(24.0).reshape(2, 3, 2, 2)

    assert ops.flatten(x).shape == (2, 12)
    assert ops.reshape(x, (2, -1, 4)).shape == (2, 3, 4)
    with pytest.raises(ShapeError):
        ops.reshape(x, (5, 5))


def test_add_shape_mismatch():
    with pytest.raises(ShapeError):
        ops.add(np.zeros(2), np.zeros(3))


def test_mean_of_empty():
    with pytest.raises(ShapeError):
        ops.mean(np.zeros(0))
