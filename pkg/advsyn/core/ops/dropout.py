from advsyn.core.tensor import make_result
from advsyn.core.ops.base import register, as_tensor


@register('dropout')
def dropout(x, rate, rng, mode='train'):
    """Inverted dropout

    Train mode zeroes each element with probability rate and scales survivors by 1 / (1 - rate).
    Infer mode, and rate 0, return the input unchanged without drawing from rng.

    Args:
        x (Tensor): Any-shape input
        rate (float): Drop probability in [0, 1)
        rng (advsyn.core.rng.Rng): Source of the keep mask, normally the ``dropout`` stream
        mode (str): ``train`` or ``infer``

    Raises:
        ValueError: If rate is outside [0, 1)
    """
    if not 0 <= rate < 1:
        raise ValueError('dropout rate must be in [0, 1), got {!r}'.format(rate))
    if mode not in ('train', 'infer'):
        raise ValueError('dropout mode must be train or infer, got {!r}'.format(mode))

    x = as_tensor(x)
    if mode == 'infer' or rate == 0:
        return x

    scale = rng.keep_mask(x.shape, rate) / (1.0 - rate)

    return make_result('dropout', x.data * scale, (x,), lambda grad: (grad * scale,))
