"""
Tensor Core

Dense float64 arithmetic and reduction kernels shared by every module.

A Tensor is a numpy float64 ndarray (row-major). Public operations are pure:
they never mutate their inputs and they reject non-finite results.
"""

import math
from typing import Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from core.errors import DomainError, ShapeError
from infra.logger import logger_tensor


Tensor = np.ndarray


# ═══════════════════════════════════════════════════════════════════════════════
# CONSTRUCTION & VALIDATION
# ═══════════════════════════════════════════════════════════════════════════════

def as_tensor(values, shape: Sequence[int] = None) -> Tensor:
    """
    Build a float64 tensor, optionally reshaping row-major.

    Args:
        values: Array-like of reals
        shape: Optional target shape; product must equal the element count

    Returns:
        New float64 ndarray
    """
    data = np.array(values, dtype=np.float64)
    if shape is not None:
        shape = tuple(int(s) for s in shape)
        if any(s <= 0 for s in shape):
            raise ShapeError("Tensor extents must be positive", shape, data.shape)
        if int(np.prod(shape)) != data.size:
            raise ShapeError("Element count does not match shape", shape, data.shape)
        data = data.reshape(shape)
    return ensure_finite(data, "as_tensor")


def ensure_finite(t: Tensor, op: str) -> Tensor:
    """Raise DomainError if t holds NaN or Inf"""
    if not np.all(np.isfinite(t)):
        logger_tensor.warning(f"NON_FINITE | op={op} | count={int(np.size(t) - np.count_nonzero(np.isfinite(t)))}")
        raise DomainError(f"{op} produced non-finite values")
    return t


def _require_non_empty(t: Tensor, op: str):
    if t.size == 0:
        raise DomainError(f"{op} of an empty tensor is undefined")


def _require_same_shape(a: Tensor, b: Tensor, op: str):
    if a.shape != b.shape:
        raise ShapeError(f"{op} requires identical shapes", a.shape, b.shape)


# ═══════════════════════════════════════════════════════════════════════════════
# REDUCTIONS
# ═══════════════════════════════════════════════════════════════════════════════

def l2_norm(t: Tensor) -> float:
    """
    Euclidean norm of all entries.

    The sum of squares is accumulated with math.fsum, which is correctly
    rounded and therefore independent of summation order and memory layout.
    """
    flat = np.ravel(np.asarray(t, dtype=np.float64))
    _require_non_empty(flat, "l2_norm")
    return math.sqrt(math.fsum((flat * flat).tolist()))


def l1_norm(t: Tensor) -> float:
    """Sum of absolute entries (correctly rounded)"""
    flat = np.ravel(np.asarray(t, dtype=np.float64))
    _require_non_empty(flat, "l1_norm")
    return math.fsum(np.abs(flat).tolist())


# ═══════════════════════════════════════════════════════════════════════════════
# ELEMENTWISE PRIMITIVES
# ═══════════════════════════════════════════════════════════════════════════════

def add(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape(a, b, "add")
    return ensure_finite(np.add(a, b), "add")


def mul(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape(a, b, "mul")
    return ensure_finite(np.multiply(a, b), "mul")


def relu(x: Tensor) -> Tensor:
    return np.maximum(x, 0.0)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of 2-D tensors (or batch @ matrix)"""
    if a.ndim < 1 or b.ndim != 2 or a.shape[-1] != b.shape[0]:
        raise ShapeError("matmul inner dimensions differ", a.shape, b.shape)
    return ensure_finite(a @ b, "matmul")


# ═══════════════════════════════════════════════════════════════════════════════
# POOLING
# ═══════════════════════════════════════════════════════════════════════════════

def max_pool1d(x: Tensor, size: int, axis: int = -1) -> Tensor:
    """Non-overlapping max pooling along one axis (trailing remainder dropped)"""
    if size < 1:
        raise DomainError(f"pool size must be >= 1, got {size}")
    axis = axis % x.ndim
    n = x.shape[axis]
    out_len = n // size
    if out_len < 1:
        raise ShapeError("Pool window larger than the axis", (size,), x.shape)
    trimmed = np.take(x, np.arange(out_len * size), axis=axis)
    new_shape = x.shape[:axis] + (out_len, size) + x.shape[axis + 1:]
    return trimmed.reshape(new_shape).max(axis=axis + 1)


def pool_windows(x: Tensor, size: int) -> Tensor:
    """
    Regroup the two trailing spatial axes into non-overlapping windows.

    Args:
        x: Tensor of shape (..., H, W)
        size: Window extent along both axes

    Returns:
        Tensor of shape (..., H // size, W // size, size * size)
    """
    h, w = x.shape[-2], x.shape[-1]
    ho, wo = h // size, w // size
    if ho < 1 or wo < 1:
        raise ShapeError("Pool window larger than the feature map", (size, size), (h, w))
    lead = x.shape[:-2]
    cropped = x[..., : ho * size, : wo * size]
    blocks = cropped.reshape(lead + (ho, size, wo, size))
    nd = len(lead)
    order = tuple(range(nd)) + (nd, nd + 2, nd + 1, nd + 3)
    return blocks.transpose(order).reshape(lead + (ho, wo, size * size))


def max_pool2d(x: Tensor, size: int) -> Tensor:
    """Non-overlapping 2-D max pooling over the two trailing axes"""
    if size < 1:
        raise DomainError(f"pool size must be >= 1, got {size}")
    return pool_windows(x, size).max(axis=-1)


# ═══════════════════════════════════════════════════════════════════════════════
# CONVOLUTION
# ═══════════════════════════════════════════════════════════════════════════════

def conv_output_length(n: int, kernel: int, stride: int, padding: int) -> int:
    """floor((n + 2p - d) / s) + 1"""
    if stride < 1:
        raise DomainError(f"stride must be >= 1, got {stride}")
    if padding < 0:
        raise DomainError(f"padding must be >= 0, got {padding}")
    span = n + 2 * padding - kernel
    if span < 0:
        raise ShapeError("Kernel longer than the padded signal", (kernel,), (n + 2 * padding,))
    return span // stride + 1


def conv1d(signal: Tensor, kernel: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """
    1-D cross-correlation of a single signal with a single kernel.

    out[i] = sum_k kernel[k] * padded[i * stride + k]
    """
    signal = np.asarray(signal, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    if signal.ndim != 1 or kernel.ndim != 1:
        raise ShapeError("conv1d expects 1-D signal and kernel", signal.shape, kernel.shape)
    out_len = conv_output_length(signal.shape[0], kernel.shape[0], stride, padding)
    padded = np.pad(signal, (padding, padding)) if padding else signal
    windows = sliding_window_view(padded, kernel.shape[0])[::stride][:out_len]
    return ensure_finite(windows @ kernel, "conv1d")


def _axis_windows(x: Tensor, extent: int, axis: int, stride: int, padding: int) -> Tensor:
    pad = [(0, 0)] * x.ndim
    pad[axis] = (padding, padding)
    padded = np.pad(x, pad) if padding else x
    windows = sliding_window_view(padded, extent, axis=axis)
    slicer = [slice(None)] * windows.ndim
    slicer[axis] = slice(None, None, stride)
    return windows[tuple(slicer)]


def _check_channels(x: Tensor, kernels: Tensor, axis: int):
    if x.ndim != 4 or kernels.ndim != 3:
        raise ShapeError("conv1d_along expects (B,C,H,W) input and (N,C,d) kernels", x.shape, kernels.shape)
    if x.shape[1] != kernels.shape[1]:
        raise ShapeError("Input channels do not match kernel channels", x.shape, kernels.shape)
    if axis not in (2, 3):
        raise DomainError(f"conv axis must be 2 (vertical) or 3 (horizontal), got {axis}")


def conv1d_along(x: Tensor, kernels: Tensor, axis: int, stride: int = 1, padding: int = 0) -> Tensor:
    """
    Multi-channel 1-D convolution along one spatial axis of a batch.

    Args:
        x: Input of shape (B, C, H, W)
        kernels: Filters of shape (N, C, d)
        axis: 2 for vertical (along H), 3 for horizontal (along W)
        stride: Stride along the convolved axis
        padding: Zero padding on both ends of the convolved axis

    Returns:
        Output of shape (B, N, H', W) or (B, N, H, W')
    """
    _check_channels(x, kernels, axis)
    conv_output_length(x.shape[axis], kernels.shape[2], stride, padding)
    windows = _axis_windows(x, kernels.shape[2], axis, stride, padding)
    out = np.einsum("bchwk,nck->bnhw", windows, kernels, optimize=True)
    return ensure_finite(out, "conv1d_along")


def conv1d_along_backward(
    x: Tensor,
    kernels: Tensor,
    grad_out: Tensor,
    axis: int,
    stride: int = 1,
    padding: int = 0,
) -> Tuple[Tensor, Tensor]:
    """
    Gradients of conv1d_along with respect to its input and kernels.

    Returns:
        (grad_x with the shape of x, grad_kernels with the shape of kernels)
    """
    _check_channels(x, kernels, axis)
    extent = kernels.shape[2]
    n_out = conv_output_length(x.shape[axis], extent, stride, padding)
    if grad_out.shape[axis] != n_out or grad_out.shape[1] != kernels.shape[0]:
        raise ShapeError("grad_out does not match the convolution output", grad_out.shape, x.shape)

    windows = _axis_windows(x, extent, axis, stride, padding)
    grad_kernels = np.einsum("bchwk,bnhw->nck", windows, grad_out, optimize=True)
    grad_windows = np.einsum("bnhw,nck->bchwk", grad_out, kernels, optimize=True)

    padded_shape = list(x.shape)
    padded_shape[axis] += 2 * padding
    grad_padded = np.zeros(padded_shape, dtype=np.float64)
    for k in range(extent):
        slicer = [slice(None)] * x.ndim
        slicer[axis] = slice(k, k + stride * (n_out - 1) + 1, stride)
        grad_padded[tuple(slicer)] += grad_windows[..., k]

    crop = [slice(None)] * x.ndim
    crop[axis] = slice(padding, padding + x.shape[axis])
    return grad_padded[tuple(crop)], grad_kernels
