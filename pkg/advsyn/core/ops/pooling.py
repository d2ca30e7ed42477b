import numpy as np

from advsyn.core.tensor import make_result
from advsyn.core.ops.base import register, as_tensor, check_rank, check_positive_int
from advsyn.core.ops.conv import im2col, col2im, conv_output_size
from advsyn.exceptions import ShapeError


@register('maxpool2d')
def maxpool2d(x, window=2, stride=None):
    """Per-window spatial maximum

    Trailing rows and columns that do not fill a whole window are dropped. The gradient of each
    window flows to its first maximal element in row-major scan order.

    Args:
        x (Tensor): Input of shape (N, C, H, W)
        window (int): Square window size
        stride (int): Step between windows, defaults to window

    Raises:
        ShapeError: If the window is larger than the input
    """
    x = as_tensor(x)
    stride = window if stride is None else stride
    check_rank('maxpool2d', x, 4)
    check_positive_int('maxpool2d', window, 'window')
    check_positive_int('maxpool2d', stride, 'stride')

    n, c, h, w = x.shape
    if window > h or window > w:
        raise ShapeError('maxpool2d', 'window {} is larger than input {}x{}'.format(window, h, w))

    out_h = conv_output_size(h, window, stride, 0)
    out_w = conv_output_size(w, window, stride, 0)

    windows = im2col(x.data.reshape(n * c, 1, h, w), window, window, stride, out_h, out_w)
    argmax = np.argmax(windows, axis=1)[:, None, :]
    out = np.take_along_axis(windows, argmax, axis=1).reshape(n, c, out_h, out_w)

    def backward(grad):
        grad_windows = np.zeros_like(windows)
        np.put_along_axis(grad_windows, argmax, grad.reshape(n * c, 1, out_h * out_w), axis=1)
        dx = col2im(grad_windows, (n * c, 1, h, w), window, window, stride, out_h, out_w)
        return (dx.reshape(x.shape),)

    return make_result('maxpool2d', out, (x,), backward)


@register('global_avg_pool')
def global_avg_pool(x):
    """Per-channel spatial mean, (N, C, H, W) -> (N, C)"""
    x = as_tensor(x)
    check_rank('global_avg_pool', x, 4)

    n, c, h, w = x.shape
    if h < 1 or w < 1:
        raise ShapeError('global_avg_pool', 'spatial size {}x{} is empty'.format(h, w))

    out = x.data.mean(axis=(2, 3))

    def backward(grad):
        return (np.broadcast_to(grad[:, :, None, None] / (h * w), x.shape).copy(),)

    return make_result('global_avg_pool', out, (x,), backward)
