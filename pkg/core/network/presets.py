"""
Architecture presets: dense students/teachers and decomposed-convolution stacks.
"""

import math
from typing import List, Sequence, Union

from core.network.spec import LayerSpec, NetworkSpec


def mlp_spec(
    input_dim: int,
    hidden_widths: Sequence[int],
    classes: int,
    loss: str = "cross_entropy",
    width_scale: float = 1.0,
) -> NetworkSpec:
    """dense -> relu blocks followed by the classifier; width_scale thins every hidden layer"""
    layers: List[LayerSpec] = []
    for width in hidden_widths:
        layers.append(LayerSpec(kind="dense", neuron_count=width))
        layers.append(LayerSpec(kind="relu"))
    layers.append(LayerSpec(kind="classifier", neuron_count=classes))
    spec = NetworkSpec(input_shape=[input_dim], layers=layers, loss=loss)
    return spec if width_scale == 1.0 else scale_widths(spec, width_scale)


def dec3_spec(
    input_shape: Sequence[int],
    widths: Sequence[int],
    shared: Union[int, Sequence[int]],
    kernel: int,
    classes: int,
    pool_size: int = 2,
) -> NetworkSpec:
    """
    Three decomposed pairs with max pooling between them and the
    classifier directly on top.

    Args:
        input_shape: [C, H, W]
        widths: Output channels F of the three pairs
        shared: Shared filter count L (one value or one per pair)
        kernel: 1D kernel extent d
        classes: Classifier outputs
    """
    if len(widths) != 3:
        raise ValueError(f"dec3_spec needs three widths, got {len(widths)}")
    shared_list = [shared] * 3 if isinstance(shared, int) else list(shared)
    layers: List[LayerSpec] = []
    for i, (width, l) in enumerate(zip(widths, shared_list)):
        layers.append(LayerSpec(kind="decomposed_pair", neuron_count=width, shared_filters=l, kernel_extent=kernel))
        if i < 2:
            layers.append(LayerSpec(kind="max_pool", pool_size=pool_size))
    layers.append(LayerSpec(kind="classifier", neuron_count=classes))
    return NetworkSpec(input_shape=list(input_shape), layers=layers)


def decn_spec(
    input_shape: Sequence[int],
    width: int,
    depth: int,
    kernel: int,
    classes: int,
    width_scale: float = 1.0,
) -> NetworkSpec:
    """
    depth decomposed pairs of overcomplete width M = width (shared and output
    filters alike). Every second pair downsamples with stride 2 instead of
    pooling. width_scale gives the uniformly thinned variant.
    """
    if depth < 1:
        raise ValueError("decn_spec needs depth >= 1")
    layers = [
        LayerSpec(
            kind="decomposed_pair",
            neuron_count=width,
            shared_filters=width,
            kernel_extent=kernel,
            stride=2 if i % 2 == 1 else 1,
        )
        for i in range(depth)
    ]
    layers.append(LayerSpec(kind="classifier", neuron_count=classes))
    spec = NetworkSpec(input_shape=list(input_shape), layers=layers)
    return spec if width_scale == 1.0 else scale_widths(spec, width_scale)


def _scaled_width(width: int, factor: float) -> int:
    return max(1, int(math.floor(factor * width + 0.5)))


def scale_widths(spec: NetworkSpec, factor: float) -> NetworkSpec:
    """
    Uniformly thinned copy of spec: every hidden layer keeps
    round(factor * N_l) neurons (and shared filters), at least one.
    The classifier and all geometry are unchanged.

    Raises:
        ValueError: factor outside (0, 1]
    """
    if not 0 < factor <= 1:
        raise ValueError(f"width factor must lie in (0, 1], got {factor}")
    layers: List[LayerSpec] = []
    for layer in spec.layers:
        update = {"input_channels": None}
        if layer.parameterized and layer.kind != "classifier":
            update["neuron_count"] = _scaled_width(layer.neuron_count, factor)
            if layer.shared_filters is not None:
                update["shared_filters"] = _scaled_width(layer.shared_filters, factor)
        layers.append(LayerSpec(**{**layer.model_dump(), **update}))
    return NetworkSpec(input_shape=list(spec.input_shape), layers=layers, loss=spec.loss)
