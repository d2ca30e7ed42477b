import numpy as np

from advsyn.core.tensor import make_result
from advsyn.core.ops.base import register, as_tensor, check_rank, grad_if
from advsyn.exceptions import ShapeError


@register('dense')
def dense(x, weights, bias):
    """Affine map ``x @ weights + bias``

    Args:
        x (Tensor): Input of shape (N, F)
        weights (Tensor): Weights of shape (F, G)
        bias (Tensor): Bias of shape (G,), broadcast over rows

    Returns:
        Tensor: Output of shape (N, G)

    Raises:
        ShapeError: If the inner dimensions or bias length disagree
    """
    x, weights, bias = as_tensor(x), as_tensor(weights), as_tensor(bias)
    check_rank('dense', x, 2)
    check_rank('dense', weights, 2, 'weights')
    check_rank('dense', bias, 1, 'bias')

    if x.shape[1] != weights.shape[0]:
        raise ShapeError('dense', 'input dimension 1 is {} but weights dimension 0 is {}'.format(
            x.shape[1],
            weights.shape[0]
        ))
    if bias.shape[0] != weights.shape[1]:
        raise ShapeError('dense', 'bias dimension 0 is {} but weights dimension 1 is {}'.format(
            bias.shape[0],
            weights.shape[1]
        ))

    out = np.matmul(x.data, weights.data) + bias.data

    def backward(grad):
        return (
            grad_if(x, lambda: np.matmul(grad, weights.data.T)),
            grad_if(weights, lambda: np.matmul(x.data.T, grad)),
            grad_if(bias, lambda: grad.sum(axis=0)),
        )

    return make_result('dense', out, (x, weights, bias), backward)
