import math
import warnings

import numpy as np
import pytest

from advsyn.core import ops
from advsyn.core.tensor import Tensor, Tape, backward
from advsyn.exceptions import ShapeError
from advsyn.nn.losses import (
    binary_cross_entropy,
    discriminator_loss,
    gan_value,
    generator_loss,
    l2_penalty,
)

HALF = np.full((4, 1), 0.5)


def test_gan_value_at_half():
    assert gan_value(HALF, HALF) == pytest.approx(math.log(0.25), abs=1e-12)


def test_gan_value_perfect_discriminator_is_zero_from_below():
    value = gan_value([[1.0]], [[0.0]])
    assert value <= 0.0
    assert value == pytest.approx(0.0, abs=1e-12)


def test_discriminator_loss_at_half():
    assert discriminator_loss(HALF, HALF).item() == pytest.approx(2 * math.log(2), abs=1e-12)


def test_discriminator_loss_perfect():
    assert discriminator_loss([[1.0]], [[0.0]]).item() == 0.0


@pytest.mark.parametrize('d_fake,expected', [
    (1.0, 0.0),
    (0.5, math.log(2)),
    (0.25, -math.log(0.25)),
])
def test_generator_loss(d_fake, expected):
    assert generator_loss(np.full((3, 1), d_fake)).item() == pytest.approx(expected, abs=1e-12)


def test_discriminator_loss_is_negated_gan_value():
    rng = np.random.default_rng(17)
    for _ in range(1000):
        d_real = np.clip(rng.uniform(size=(rng.integers(1, 6), 1)), 1e-7, 1 - 1e-7)
        d_fake = np.clip(rng.uniform(size=(rng.integers(1, 6), 1)), 1e-7, 1 - 1e-7)
        assert discriminator_loss(d_real, d_fake).item() == pytest.approx(-gan_value(d_real, d_fake), rel=1e-12, abs=1e-12)


def test_bce_exact_match_is_exactly_zero():
    assert binary_cross_entropy([[1.0]], [1]).item() == 0.0
    assert binary_cross_entropy([[0.0]], [0]).item() == 0.0


@pytest.mark.parametrize('pred,target,expected', [
    (0.9, 1, -math.log(0.9)),
    (0.5, 1, math.log(2)),
    (0.5, 0, math.log(2)),
])
def test_bce_values(pred, target, expected):
    assert binary_cross_entropy([[pred]], [target]).item() == pytest.approx(expected, abs=1e-12)


def test_bce_clamps_confident_mistakes():
    value = binary_cross_entropy([[0.0]], [1]).item()
    assert np.isfinite(value)
    assert value == pytest.approx(-math.log(1e-7))


def test_bce_accepts_tensor_target():
    assert binary_cross_entropy(Tensor([[0.9]]), Tensor([1.0])).item() == pytest.approx(-math.log(0.9))


def test_bce_errors():
    with pytest.raises(ShapeError):
        binary_cross_entropy(np.zeros((0, 1)), [])
    with pytest.raises(ShapeError):
        binary_cross_entropy([[0.5], [0.5]], [1, 0, 1])


def test_bce_gradient_of_clamped_region_is_zero():
    pred = Tensor([[1.0]], requires_grad=True)

    with Tape() as tape:
        loss = binary_cross_entropy(pred, [0])

    assert backward(tape, loss)[pred][0, 0] == 0.0


def test_backward_of_losses_raises_no_warnings():
    pred = Tensor([[0.3], [0.8]], requires_grad=True)
    weight = Tensor([1.0, -2.0], requires_grad=True)

    with warnings.catch_warnings():
        warnings.simplefilter('error')
        with Tape() as tape:
            loss = ops.add(binary_cross_entropy(pred, [0, 1]), l2_penalty([weight], 0.5))
            loss = ops.add(loss, ops.mean(pred))
        grads = backward(tape, loss)

    np.testing.assert_allclose(grads[weight], [1.0, -2.0])
    np.testing.assert_allclose(grads[pred], [[(1 / 0.7 + 1) / 2], [(-1 / 0.8 + 1) / 2]])


def test_l2_penalty_values():
    assert l2_penalty([Tensor([3.0, 4.0])], 1.0).item() == 25.0
    assert l2_penalty([Tensor([3.0, 4.0])], 0.0).item() == 0.0
    assert l2_penalty([], 1.0).item() == 0.0

    with pytest.raises(ValueError):
        l2_penalty([Tensor([1.0])], -1.0)
