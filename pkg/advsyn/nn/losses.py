"""Adversarial and classification losses

Every loss is the mean over the batch and returns a 0-d :class:`~advsyn.core.tensor.Tensor`
recorded on the active tape. Probabilities enter logarithms through ``log(max(p, 1e-7))`` and
``log(max(1 - p, 1e-7))``, so raw 0 and 1 inputs stay finite while an exact match
(prediction 1 for target 1) still scores exactly zero.
"""

import numpy as np

from advsyn.core import ops
from advsyn.core.tensor import Tensor, make_result
from advsyn.core.ops.base import register, as_tensor, grad_if, scalar
from advsyn.exceptions import ShapeError

PROBABILITY_CLAMP = 1e-7


def _log_clamped(values):
    return np.log(np.maximum(values, PROBABILITY_CLAMP))


def _check_batch(op, tensor):
    if tensor.size == 0:
        raise ShapeError(op, 'empty batch')


def gan_value(d_real, d_fake):
    """Adversarial value mean(log D(x)) + mean(log(1 - D(G(z)))) maximized by the discriminator

    Args:
        d_real (Tensor|array-like): Discriminator probabilities on real images
        d_fake (Tensor|array-like): Discriminator probabilities on generated images

    Returns:
        float: Value, always <= 0
    """
    d_real, d_fake = as_tensor(d_real), as_tensor(d_fake)
    _check_batch('gan_value', d_real)
    _check_batch('gan_value', d_fake)

    return float(np.mean(_log_clamped(d_real.data)) + np.mean(_log_clamped(1.0 - d_fake.data)))


@register('binary_cross_entropy')
def binary_cross_entropy(pred, target):
    """-mean(y log p + (1 - y) log(1 - p))

    Args:
        pred (Tensor): Probabilities, any shape
        target (Tensor|array-like): Labels in {0, 1} (soft labels allowed), same number of elements

    Raises:
        ShapeError: Empty batch or length mismatch
    """
    pred = as_tensor(pred)
    target = np.asarray(target.data if isinstance(target, Tensor) else target, dtype=np.float64)
    _check_batch('binary_cross_entropy', pred)

    if target.ndim == 0:
        target = np.full(pred.shape, float(target))
    if target.size != pred.size:
        raise ShapeError('binary_cross_entropy', 'prediction has {} elements but target has {}'.format(
            pred.size,
            target.size
        ))
    target = target.reshape(pred.shape)

    p = pred.data
    per_item = -(target * _log_clamped(p) + (1.0 - target) * _log_clamped(1.0 - p))
    count = p.size

    def backward(grad):
        def pred_grad():
            d_pos = np.where(p > PROBABILITY_CLAMP, -target / np.maximum(p, PROBABILITY_CLAMP), 0.0)
            d_neg = np.where(1.0 - p > PROBABILITY_CLAMP, (1.0 - target) / np.maximum(1.0 - p, PROBABILITY_CLAMP), 0.0)
            return scalar(grad) * (d_pos + d_neg) / count

        return (grad_if(pred, pred_grad),)

    return make_result('binary_cross_entropy', np.mean(per_item), (pred,), backward)


def discriminator_loss(d_real, d_fake):
    """L_D = -mean(log D(x)) - mean(log(1 - D(G(z))))"""
    return ops.add(binary_cross_entropy(d_real, 1.0), binary_cross_entropy(d_fake, 0.0))


def generator_loss(d_fake):
    """Non-saturating L_G = -mean(log D(G(z)))"""
    return binary_cross_entropy(d_fake, 1.0)


@register('l2_penalty')
def l2_penalty(params, lam):
    """lam * sum of squares over every tensor in params

    Args:
        params (list(Tensor)): Penalized tensors
        lam (float): Non-negative strength

    Raises:
        ValueError: If lam is negative
    """
    if lam < 0:
        raise ValueError('l2 lambda must be >= 0, got {!r}'.format(lam))

    params = tuple(as_tensor(p) for p in params)
    value = lam * np.sum([np.sum(p.data * p.data) for p in params]) if params else 0.0

    def backward(grad):
        return tuple(grad_if(p, lambda p=p: 2.0 * lam * scalar(grad) * p.data) for p in params)

    return make_result('l2_penalty', np.float64(value), params, backward)
