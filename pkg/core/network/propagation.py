"""
Forward Pass, Loss and Manual Backpropagation

Layers run on whole mini-batches (leading batch axis). Each kernel returns
its output and a record holding what its backward needs; the backward
walks those records in reverse.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Tuple

import numpy as np

from core.errors import ContractError, DomainError, ShapeError
from core.network.model import Network, ParamBlock
from core.network.spec import LayerSpec
from core.tensor import conv1d_along, conv1d_along_backward, ensure_finite, pool_windows, relu


# ═══════════════════════════════════════════════════════════════════════════════
# ACTIVATION RECORD
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass
class Activations:
    """
    Everything a forward pass retains for backprop.

    Attributes:
        outputs: Per-layer outputs (batched)
        records: Per-layer kernel caches
        network_id: id() of the network that produced them
        revision: Network revision at forward time
        single: True when the caller passed one unbatched sample
    """
    outputs: List[np.ndarray]
    records: List[Dict[str, Any]]
    network_id: int
    revision: int
    single: bool
    batch_size: int
    prediction_shape: Tuple[int, ...] = field(default=())


# ═══════════════════════════════════════════════════════════════════════════════
# FORWARD KERNELS
# ═══════════════════════════════════════════════════════════════════════════════

def _dense_forward(layer: LayerSpec, blocks: List[ParamBlock], x: np.ndarray):
    (block,) = blocks
    flat = x.reshape(x.shape[0], -1)
    out = flat @ block.weights.T + block.bias
    return out, {"flat": flat, "input_shape": x.shape}


def _conv_axis(layer: LayerSpec) -> int:
    return 2 if layer.kind == "conv1d_vertical" else 3


def _conv_forward(layer: LayerSpec, blocks: List[ParamBlock], x: np.ndarray):
    (block,) = blocks
    out = conv1d_along(x, block.weights, _conv_axis(layer), layer.stride, layer.effective_padding)
    return out + block.bias[None, :, None, None], {"x": x}


def _decomposed_stages(vertical: ParamBlock, horizontal: ParamBlock, x: np.ndarray, stride: int, padding: int):
    u = conv1d_along(x, vertical.weights, 2, stride, padding) + vertical.bias[None, :, None, None]
    a = relu(u)
    z = conv1d_along(a, horizontal.weights, 3, stride, padding) + horizontal.bias[None, :, None, None]
    return u, a, z


def decomposed_forward(
    vertical: ParamBlock,
    horizontal: ParamBlock,
    x: np.ndarray,
    stride: int = 1,
    padding: int = 0,
) -> np.ndarray:
    """
    One decomposed layer: shared vertical 1-D filters, ReLU, horizontal 1-D filters, ReLU.

    Args:
        vertical: L shared filters of shape (L, C, d) with L biases
        horizontal: F output filters of shape (F, L, d) with F biases
        x: Input of shape (C, H, W) or a batch (B, C, H, W)

    Raises:
        ShapeError: channel counts of input, vertical and horizontal stages disagree
    """
    single = x.ndim == 3
    batch = x[None] if single else x
    if horizontal.weights.ndim != 3 or horizontal.weights.shape[1] != vertical.weights.shape[0]:
        raise ShapeError(
            "Horizontal stage must read every shared filter",
            vertical.weights.shape,
            horizontal.weights.shape,
        )
    _, _, z = _decomposed_stages(vertical, horizontal, batch, stride, padding)
    out = relu(z)
    return out[0] if single else out


def _decomposed_forward(layer: LayerSpec, blocks: List[ParamBlock], x: np.ndarray):
    vertical, horizontal = blocks
    u, a, z = _decomposed_stages(vertical, horizontal, x, layer.stride, layer.effective_padding)
    return relu(z), {"x": x, "u": u, "a": a, "z": z}


def _pool_forward(layer: LayerSpec, blocks: List[ParamBlock], x: np.ndarray):
    windows = pool_windows(x, layer.pool_size)
    index = np.argmax(windows, axis=-1)
    out = np.take_along_axis(windows, index[..., None], axis=-1)[..., 0]
    return out, {"index": index, "input_shape": x.shape}


def _relu_forward(layer: LayerSpec, blocks: List[ParamBlock], x: np.ndarray):
    return relu(x), {"x": x}


FORWARD_KERNELS: Dict[str, Callable] = {
    "dense": _dense_forward,
    "classifier": _dense_forward,
    "conv1d_vertical": _conv_forward,
    "conv1d_horizontal": _conv_forward,
    "decomposed_pair": _decomposed_forward,
    "max_pool": _pool_forward,
    "relu": _relu_forward,
}


# ═══════════════════════════════════════════════════════════════════════════════
# BACKWARD KERNELS
# ═══════════════════════════════════════════════════════════════════════════════

def _dense_backward(layer, blocks, record, grad):
    (block,) = blocks
    grad_w = grad.T @ record["flat"]
    grad_b = grad.sum(axis=0)
    grad_x = (grad @ block.weights).reshape(record["input_shape"])
    return grad_x, [(grad_w, grad_b)]


def _conv_backward(layer, blocks, record, grad):
    (block,) = blocks
    grad_x, grad_w = conv1d_along_backward(
        record["x"], block.weights, grad, _conv_axis(layer), layer.stride, layer.effective_padding
    )
    return grad_x, [(grad_w, grad.sum(axis=(0, 2, 3)))]


def _decomposed_backward(layer, blocks, record, grad):
    vertical, horizontal = blocks
    s, p = layer.stride, layer.effective_padding
    grad_z = grad * (record["z"] > 0)
    grad_a, grad_wh = conv1d_along_backward(record["a"], horizontal.weights, grad_z, 3, s, p)
    grad_u = grad_a * (record["u"] > 0)
    grad_x, grad_wv = conv1d_along_backward(record["x"], vertical.weights, grad_u, 2, s, p)
    return grad_x, [
        (grad_wv, grad_u.sum(axis=(0, 2, 3))),
        (grad_wh, grad_z.sum(axis=(0, 2, 3))),
    ]


def _pool_backward(layer, blocks, record, grad):
    k = layer.pool_size
    index = record["index"]
    b, c, ho, wo = index.shape
    windows = np.zeros((b, c, ho, wo, k * k))
    np.put_along_axis(windows, index[..., None], grad[..., None], axis=-1)
    blocks_ = windows.reshape(b, c, ho, wo, k, k).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, ho * k, wo * k)
    grad_x = np.zeros(record["input_shape"])
    grad_x[:, :, : ho * k, : wo * k] = blocks_
    return grad_x, []


def _relu_backward(layer, blocks, record, grad):
    return grad * (record["x"] > 0), []


BACKWARD_KERNELS: Dict[str, Callable] = {
    "dense": _dense_backward,
    "classifier": _dense_backward,
    "conv1d_vertical": _conv_backward,
    "conv1d_horizontal": _conv_backward,
    "decomposed_pair": _decomposed_backward,
    "max_pool": _pool_backward,
    "relu": _relu_backward,
}


# ═══════════════════════════════════════════════════════════════════════════════
# PUBLIC API
# ═══════════════════════════════════════════════════════════════════════════════

def forward(net: Network, x: np.ndarray) -> Tuple[np.ndarray, Activations]:
    """
    Run the network on one sample or a batch.

    Args:
        net: Network to evaluate
        x: Input of shape input_shape (single sample) or (B, *input_shape)

    Returns:
        (prediction, activations) where prediction is (classes,) for a
        single sample and (B, classes) for a batch
    """
    x = np.asarray(x, dtype=np.float64)
    input_shape = tuple(net.spec.input_shape)
    single = x.shape == input_shape
    if single:
        x = x[None]
    if x.shape[1:] != input_shape:
        raise ShapeError("Input does not match the network input shape", x.shape[1:], input_shape)

    outputs, records = [], []
    h = x
    for i, layer in enumerate(net.spec.layers):
        h, record = FORWARD_KERNELS[layer.kind](layer, net.layer_blocks(i), h)
        outputs.append(h)
        records.append(record)
    ensure_finite(h, "forward")

    prediction = h[0] if single else h
    activations = Activations(
        outputs=outputs,
        records=records,
        network_id=id(net),
        revision=net.revision,
        single=single,
        batch_size=x.shape[0],
        prediction_shape=prediction.shape,
    )
    return prediction, activations


def predict(net: Network, x: np.ndarray) -> np.ndarray:
    """Forward pass without keeping the activations"""
    return forward(net, x)[0]


def backward(net: Network, activations: Activations, loss_grad: np.ndarray) -> List[ParamBlock]:
    """
    Backpropagate dLoss/dPrediction through the network.

    Returns:
        One gradient ParamBlock per parameter block, in declaration order,
        bias gradients included
    """
    if activations.network_id != id(net) or activations.revision != net.revision:
        raise ContractError("Activations are stale: the network changed since the forward pass")
    if len(activations.records) != len(net.spec.layers):
        raise ContractError("Activations do not match the network's layer count")
    loss_grad = np.asarray(loss_grad, dtype=np.float64)
    if loss_grad.shape != activations.prediction_shape:
        raise ShapeError("Loss gradient does not match the prediction", loss_grad.shape, activations.prediction_shape)

    grad = loss_grad[None] if activations.single else loss_grad
    grads_by_key: Dict[str, ParamBlock] = {}
    for i in reversed(range(len(net.spec.layers))):
        layer = net.spec.layers[i]
        blocks = net.layer_blocks(i)
        grad, block_grads = BACKWARD_KERNELS[layer.kind](layer, blocks, activations.records[i], grad)
        for block, (grad_w, grad_b) in zip(blocks, block_grads):
            grads_by_key[block.key] = ParamBlock(block.key, grad_w, grad_b, block.prunable)
    return [grads_by_key[b.key] for b in net.blocks]


# ═══════════════════════════════════════════════════════════════════════════════
# LOSSES
# ═══════════════════════════════════════════════════════════════════════════════

def one_hot(labels: np.ndarray, classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.shape[0], classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def loss_and_grad(kind: str, prediction: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Mean loss over the batch and its gradient with respect to the prediction.

    Args:
        kind: "cross_entropy" (softmax over logits, integer labels) or
              "squared_error" (sum of squares per sample; integer labels
              are one-hot encoded, real arrays are used as-is)
        prediction: (B, K) logits / outputs
        targets: (B,) labels or (B, K) real targets

    Returns:
        (loss, gradient of shape (B, K))
    """
    prediction = np.asarray(prediction, dtype=np.float64)
    if prediction.ndim != 2:
        raise ShapeError("Loss expects batched (B, K) predictions", prediction.shape, ())
    batch, classes = prediction.shape
    targets = np.asarray(targets)

    if kind == "cross_entropy":
        labels = targets.astype(np.int64)
        if labels.shape != (batch,):
            raise ShapeError("Cross-entropy expects one label per sample", labels.shape, (batch,))
        shifted = prediction - prediction.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        total = exp.sum(axis=1, keepdims=True)
        log_probs = shifted - np.log(total)
        loss = -float(np.mean(log_probs[np.arange(batch), labels]))
        grad = (exp / total - one_hot(labels, classes)) / batch
        return loss, grad

    if kind == "squared_error":
        if np.issubdtype(targets.dtype, np.integer) and targets.shape == (batch,):
            targets = one_hot(targets, classes)
        targets = targets.astype(np.float64)
        if targets.shape != prediction.shape:
            raise ShapeError("Squared error targets must match predictions", targets.shape, prediction.shape)
        diff = prediction - targets
        loss = float(np.mean(np.sum(diff * diff, axis=1)))
        return loss, 2.0 * diff / batch

    raise DomainError(f"Unknown loss kind: {kind}")
