"""Strided 2-D convolution and its transpose

Convolution is cross-correlation (no kernel flip). The fast paths unfold the padded input into
columns with one strided slice per kernel offset and contract with a single matmul; the
``*_reference`` functions are nested-loop versions kept as the correctness oracle.
"""

import numpy as np

from advsyn.core.tensor import make_result
from advsyn.core.ops.base import (
    register, as_tensor, check_rank, check_positive_int, check_non_negative_int, grad_if
)
from advsyn.exceptions import ShapeError


def conv_output_size(size, kernel, stride, padding):
    """floor((size + 2 * padding - kernel) / stride) + 1"""
    return (size + 2 * padding - kernel) // stride + 1


def conv_transpose_output_size(size, kernel, stride, padding):
    """(size - 1) * stride - 2 * padding + kernel"""
    return (size - 1) * stride - 2 * padding + kernel


def im2col(padded, kh, kw, stride, out_h, out_w):
    """Unfold (N, C, Hp, Wp) into (N, C * kh * kw, out_h * out_w) columns"""
    n, c = padded.shape[:2]
    cols = np.empty((n, c, kh, kw, out_h, out_w), dtype=padded.dtype)

    for u in range(kh):
        u_max = u + stride * out_h
        for v in range(kw):
            v_max = v + stride * out_w
            cols[:, :, u, v] = padded[:, :, u:u_max:stride, v:v_max:stride]

    return cols.reshape(n, c * kh * kw, out_h * out_w)


def col2im(cols, padded_shape, kh, kw, stride, out_h, out_w):
    """Fold columns back into a (N, C, Hp, Wp) array, summing overlapping contributions"""
    n, c = padded_shape[:2]
    cols = cols.reshape(n, c, kh, kw, out_h, out_w)
    padded = np.zeros(padded_shape, dtype=cols.dtype)

    for u in range(kh):
        u_max = u + stride * out_h
        for v in range(kw):
            v_max = v + stride * out_w
            padded[:, :, u:u_max:stride, v:v_max:stride] += cols[:, :, u, v]

    return padded


def _pad(data, padding):
    if padding == 0:
        return data
    return np.pad(data, ((0, 0), (0, 0), (padding, padding), (padding, padding)), mode='constant')


def _check_conv_args(op, x, kernel, bias, stride, padding, channel_axis):
    check_rank(op, x, 4)
    check_rank(op, kernel, 4, 'kernel')
    check_rank(op, bias, 1, 'bias')
    check_positive_int(op, stride, 'stride')
    check_non_negative_int(op, padding, 'padding')

    if x.shape[1] != kernel.shape[channel_axis]:
        raise ShapeError(op, 'input channel dimension 1 is {} but kernel dimension {} is {}'.format(
            x.shape[1],
            channel_axis,
            kernel.shape[channel_axis]
        ))

    out_channels = kernel.shape[1 - channel_axis]
    if bias.shape[0] != out_channels:
        raise ShapeError(op, 'bias dimension 0 is {} but kernel has {} output channels'.format(
            bias.shape[0],
            out_channels
        ))


@register('conv2d')
def conv2d(x, kernel, bias, stride=1, padding=0):
    """Cross-correlate a batch of images with a kernel bank

    Args:
        x (Tensor): Input of shape (N, C_in, H, W)
        kernel (Tensor): Kernel of shape (C_out, C_in, kh, kw)
        bias (Tensor): Bias of shape (C_out,)
        stride (int): Step between windows, >= 1
        padding (int): Zero padding added on every spatial border

    Returns:
        Tensor: Output of shape (N, C_out, H', W') with H' = floor((H + 2 * padding - kh) / stride) + 1

    Raises:
        ShapeError: On rank or channel mismatch, non-positive stride, or a kernel larger than the padded input
    """
    x, kernel, bias = as_tensor(x), as_tensor(kernel), as_tensor(bias)
    _check_conv_args('conv2d', x, kernel, bias, stride, padding, channel_axis=1)

    n, c_in, h, w = x.shape
    c_out, _, kh, kw = kernel.shape

    if h + 2 * padding < kh:
        raise ShapeError('conv2d', 'padded height {} is smaller than kernel height {}'.format(h + 2 * padding, kh))
    if w + 2 * padding < kw:
        raise ShapeError('conv2d', 'padded width {} is smaller than kernel width {}'.format(w + 2 * padding, kw))

    out_h = conv_output_size(h, kh, stride, padding)
    out_w = conv_output_size(w, kw, stride, padding)

    padded = _pad(x.data, padding)
    cols = im2col(padded, kh, kw, stride, out_h, out_w)
    w_col = kernel.data.reshape(c_out, -1)

    out = np.matmul(w_col, cols).reshape(n, c_out, out_h, out_w)
    out += bias.data[None, :, None, None]

    def backward(grad):
        grad_cols = grad.reshape(n, c_out, out_h * out_w)

        def input_grad():
            padded_grad = col2im(np.matmul(w_col.T, grad_cols), padded.shape, kh, kw, stride, out_h, out_w)
            return padded_grad[:, :, padding:padding + h, padding:padding + w]

        return (
            grad_if(x, input_grad),
            grad_if(kernel, lambda: np.tensordot(grad_cols, cols, axes=([0, 2], [0, 2])).reshape(kernel.shape)),
            grad_if(bias, lambda: grad.sum(axis=(0, 2, 3))),
        )

    return make_result('conv2d', out, (x, kernel, bias), backward)


@register('conv2d_transpose')
def conv2d_transpose(x, kernel, bias, stride=1, padding=0):
    """Transposed convolution, the adjoint of :func:`conv2d` with the same geometry

    Args:
        x (Tensor): Input of shape (N, C_in, H, W)
        kernel (Tensor): Kernel of shape (C_in, C_out, kh, kw)
        bias (Tensor): Bias of shape (C_out,)
        stride (int): Upsampling factor, >= 1 and <= kernel size
        padding (int): Border cropped from the full scatter result

    Returns:
        Tensor: Output of shape (N, C_out, H', W') with H' = (H - 1) * stride - 2 * padding + kh

    Raises:
        ShapeError: On rank or channel mismatch, kernel smaller than stride, or non-positive output size
    """
    x, kernel, bias = as_tensor(x), as_tensor(kernel), as_tensor(bias)
    _check_conv_args('conv2d_transpose', x, kernel, bias, stride, padding, channel_axis=0)

    n, c_in, h, w = x.shape
    _, c_out, kh, kw = kernel.shape

    if kh < stride or kw < stride:
        raise ShapeError('conv2d_transpose', 'kernel {}x{} is smaller than stride {}'.format(kh, kw, stride))

    out_h = conv_transpose_output_size(h, kh, stride, padding)
    out_w = conv_transpose_output_size(w, kw, stride, padding)
    if out_h < 1 or out_w < 1:
        raise ShapeError('conv2d_transpose', 'computed output size {}x{} is not positive'.format(out_h, out_w))

    full_shape = (n, c_out, (h - 1) * stride + kh, (w - 1) * stride + kw)
    w_col = kernel.data.reshape(c_in, c_out * kh * kw)
    x_flat = x.data.reshape(n, c_in, h * w)

    full = col2im(np.matmul(w_col.T, x_flat), full_shape, kh, kw, stride, h, w)
    out = full[:, :, padding:padding + out_h, padding:padding + out_w] + bias.data[None, :, None, None]

    def backward(grad):
        grad_cols = im2col(_pad(grad, padding), kh, kw, stride, h, w)

        return (
            grad_if(x, lambda: np.matmul(w_col, grad_cols).reshape(x.shape)),
            grad_if(kernel, lambda: np.tensordot(x_flat, grad_cols, axes=([0, 2], [0, 2])).reshape(kernel.shape)),
            grad_if(bias, lambda: grad.sum(axis=(0, 2, 3))),
        )

    return make_result('conv2d_transpose', out, (x, kernel, bias), backward)


def conv2d_reference(x, kernel, bias, stride=1, padding=0):
    """Nested-loop cross-correlation over plain arrays, the oracle for :func:`conv2d`"""
    x, kernel, bias = np.asarray(x, dtype=np.float64), np.asarray(kernel, dtype=np.float64), np.asarray(bias)
    n, _, h, w = x.shape
    c_out, _, kh, kw = kernel.shape
    out_h = conv_output_size(h, kh, stride, padding)
    out_w = conv_output_size(w, kw, stride, padding)
    padded = _pad(x, padding)

    out = np.zeros((n, c_out, out_h, out_w))
    for b in range(n):
        for o in range(c_out):
            for i in range(out_h):
                for j in range(out_w):
                    window = padded[b, :, i * stride:i * stride + kh, j * stride:j * stride + kw]
                    out[b, o, i, j] = np.sum(window * kernel[o]) + bias[o]
    return out


def conv2d_transpose_reference(x, kernel, bias, stride=1, padding=0):
    """Nested-loop scatter-add over plain arrays, the oracle for :func:`conv2d_transpose`"""
    x, kernel, bias = np.asarray(x, dtype=np.float64), np.asarray(kernel, dtype=np.float64), np.asarray(bias)
    n, c_in, h, w = x.shape
    _, c_out, kh, kw = kernel.shape
    out_h = conv_transpose_output_size(h, kh, stride, padding)
    out_w = conv_transpose_output_size(w, kw, stride, padding)

    full = np.zeros((n, c_out, (h - 1) * stride + kh, (w - 1) * stride + kw))
    for b in range(n):
        for c in range(c_in):
            for i in range(h):
                for j in range(w):
                    full[b, :, i * stride:i * stride + kh, j * stride:j * stride + kw] += x[b, c, i, j] * kernel[c]

    return full[:, :, padding:padding + out_h, padding:padding + out_w] + bias[None, :, None, None]
