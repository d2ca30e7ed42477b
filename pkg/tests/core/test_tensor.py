import numpy as np
import pytest

from advsyn.core import ops
from advsyn.core.tensor import Tape, Tensor, active_tape, backward, no_grad
from advsyn.exceptions import GradientError


def test_tensor_is_float64_and_contiguous():
    tensor = Tensor([[1, 2], [3, 4]])
    assert tensor.data.dtype == np.float64
    assert tensor.data.flags['C_CONTIGUOUS']
    assert tensor.shape == (2, 2)
    assert tensor.size == 4
    assert len(tensor) == 2


def test_tensor_item():
    assert Tensor(3.5).item() == 3.5

    with pytest.raises(ValueError):
        Tensor([1.0, 2.0]).item()


def test_detach_copies_data():
    tensor = Tensor([1.0, 2.0], requires_grad=True)
    detached = tensor.detach()

    detached.data[0] = 9.0
    assert tensor.data[0] == 1.0
    assert not detached.requires_grad


def test_no_recording_without_tape():
    x = Tensor([1.0, 2.0], requires_grad=True)
    y = ops.sum(x)

    assert not y.requires_grad
    assert active_tape() is None


def test_sum_gradient_is_ones():
    """loss = sum(x) has gradient one everywhere"""
    x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)

    with Tape() as tape:
        loss = ops.sum(x)

    grads = backward(tape, loss)
    np.testing.assert_array_equal(grads[x], np.ones((2, 3)))
    np.testing.assert_array_equal(x.grad, np.ones((2, 3)))


def test_sigmoid_closed_form_gradient():
    """d sigmoid(w * x) / dw at w=0, x=1 is 0.25"""
    w = Tensor([[0.0]], requires_grad=True)

    with Tape() as tape:
        loss = ops.sum(ops.sigmoid(ops.dense(Tensor([[1.0]]), w, Tensor([0.0]))))

    assert backward(tape, loss)[w][0, 0] == pytest.approx(0.25, abs=1e-15)


def test_shared_input_accumulates():
    x = Tensor([2.0], requires_grad=True)

    with Tape() as tape:
        loss = ops.sum(ops.add(x, x))

    assert backward(tape, loss)[x][0] == 2.0


def test_watched_unused_leaf_gets_zero_gradient():
    used = Tensor([1.0], requires_grad=True)
    unused = Tensor([[1.0, 2.0]], requires_grad=True)

    with Tape() as tape:
        tape.watch(used, unused)
        loss = ops.sum(ops.scale(used, 3.0))

    grads = backward(tape, loss)
    assert grads[used][0] == 3.0
    np.testing.assert_array_equal(grads[unused], np.zeros((1, 2)))


def test_watch_requires_grad():
    with Tape() as tape:
        with pytest.raises(GradientError):
            tape.watch(Tensor([1.0]))


def test_gradient_aligned_with_sources():
    a = Tensor([1.0, 2.0], requires_grad=True)
    b = Tensor([3.0, 4.0], requires_grad=True)

    with Tape() as tape:
        loss = ops.sum(ops.add(ops.scale(a, 2.0), b))

    grad_b, grad_a = tape.gradient(loss, [b, a])
    np.testing.assert_array_equal(grad_a, [2.0, 2.0])
    np.testing.assert_array_equal(grad_b, [1.0, 1.0])


def test_backward_rejects_non_scalar():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with Tape() as tape:
        y = ops.scale(x, 2.0)

    with pytest.raises(GradientError):
        backward(tape, y)


def test_backward_rejects_foreign_loss():
    x = Tensor([1.0], requires_grad=True)
    with Tape():
        loss = ops.sum(x)

    with pytest.raises(GradientError):
        backward(Tape(), loss)


def test_no_grad_disables_recording():
    x = Tensor([1.0], requires_grad=True)

    with Tape() as tape:
        with no_grad():
            y = ops.sum(x)
        z = ops.sum(x)

    assert not y.requires_grad
    assert z.requires_grad
    assert len(tape.nodes) == 1


def test_nested_tapes_record_on_innermost():
    x = Tensor([1.0], requires_grad=True)

    with Tape() as outer:
        with Tape() as inner:
            ops.sum(x)
        ops.sum(x)

    assert len(inner.nodes) == 1
    assert len(outer.nodes) == 1


def test_tape_exit_out_of_order():
    first = Tape()
    second = Tape()
    first.__enter__()
    second.__enter__()

    with pytest.raises(GradientError):
        first.__exit__(None, None, None)

    second.__exit__(None, None, None)
    first.__exit__(None, None, None)
