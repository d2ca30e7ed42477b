"""Central finite-difference gradient checking"""

import numpy as np

from advsyn.core.tensor import Tensor, Tape, backward


def relative_error(analytic, numeric, floor=1e-8):
    """max|analytic - numeric| normalized by the larger gradient magnitude, denominator clamped at floor"""
    scale = max(np.max(np.abs(analytic), initial=0.0), np.max(np.abs(numeric), initial=0.0), floor)
    return float(np.max(np.abs(analytic - numeric), initial=0.0) / scale)


def numeric_gradient(fn, arrays, index, h=1e-5):
    """Central-difference gradient of the scalar fn(*arrays) with respect to arrays[index]"""
    target = arrays[index]
    grad = np.zeros_like(target)
    it = np.nditer(target, flags=['multi_index'])

    for _ in it:
        position = it.multi_index
        original = target[position]

        target[position] = original + h
        plus = fn(*[Tensor(a) for a in arrays]).item()
        target[position] = original - h
        minus = fn(*[Tensor(a) for a in arrays]).item()
        target[position] = original

        grad[position] = (plus - minus) / (2 * h)

    return grad


def check_gradients(fn, arrays, h=1e-5):
    """Compare analytic and numeric gradients of a scalar-valued function

    Args:
        fn (callable): Takes one Tensor per array and returns a single-element Tensor
        arrays (list(numpy.ndarray)): Float64 input values; perturbed in place and restored
        h (float): Finite-difference step

    Returns:
        list(float): :func:`relative_error` for each input, in order
    """
    arrays = [np.array(a, dtype=np.float64) for a in arrays]
    leaves = [Tensor(a.copy(), requires_grad=True) for a in arrays]

    with Tape() as tape:
        tape.watch(*leaves)
        loss = fn(*leaves)

    grads = backward(tape, loss)

    return [
        relative_error(grads[leaf], numeric_gradient(fn, arrays, i, h))
        for i, leaf in enumerate(leaves)
    ]
