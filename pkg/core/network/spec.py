"""
Network Specification Schemas

Pydantic models describing layer architectures, plus the shape rules that
decide whether adjacent layers fit together and how large each neuron
group (P_l) is.
"""

from dataclasses import dataclass
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from core.tensor import conv_output_length


LayerKind = Literal[
    "dense",
    "conv1d_vertical",
    "conv1d_horizontal",
    "decomposed_pair",
    "max_pool",
    "relu",
    "classifier",
]

LossKind = Literal["cross_entropy", "squared_error"]

PARAMETERIZED_KINDS = {"dense", "conv1d_vertical", "conv1d_horizontal", "decomposed_pair", "classifier"}
CONV_KINDS = {"conv1d_vertical", "conv1d_horizontal", "decomposed_pair"}


# ═══════════════════════════════════════════════════════════════════════════════
# LAYER SPEC
# ═══════════════════════════════════════════════════════════════════════════════

class LayerSpec(BaseModel):
    """
    One layer of a network.

    Parameterized kinds carry neuron_count (N_l). A decomposed pair is a
    vertical 1D stage with shared_filters (L) neurons, a ReLU, a horizontal
    1D stage with neuron_count (F) neurons and a final ReLU.
    """
    kind: LayerKind = Field(..., description="Layer type")

    neuron_count: Optional[int] = Field(
        None,
        ge=1,
        description="N_l: neurons (output channels / units / classes)"
    )

    shared_filters: Optional[int] = Field(
        None,
        ge=1,
        description="L: shared intermediate filters of a decomposed pair"
    )

    kernel_extent: Optional[int] = Field(
        None,
        ge=1,
        description="d: 1D kernel length (conv kinds only)"
    )

    stride: int = Field(default=1, ge=1, description="Stride along the convolved axis")

    padding: Optional[int] = Field(
        None,
        ge=0,
        description="Zero padding per side; defaults to (d - 1) // 2"
    )

    pool_size: int = Field(default=2, ge=1, description="Window of max_pool layers")

    input_channels: Optional[int] = Field(
        None,
        ge=1,
        description="C: filled in by shape inference (flattened fan-in for dense kinds)"
    )

    @property
    def parameterized(self) -> bool:
        return self.kind in PARAMETERIZED_KINDS

    @property
    def effective_padding(self) -> int:
        if self.padding is not None:
            return self.padding
        return (self.kernel_extent - 1) // 2 if self.kernel_extent else 0

    @model_validator(mode="after")
    def _check_fields(self):
        if self.parameterized and self.neuron_count is None:
            raise ValueError(f"{self.kind} layer requires neuron_count")
        if self.kind in CONV_KINDS and self.kernel_extent is None:
            raise ValueError(f"{self.kind} layer requires kernel_extent")
        if self.kind == "decomposed_pair" and self.shared_filters is None:
            raise ValueError("decomposed_pair layer requires shared_filters")
        if not self.parameterized and self.neuron_count is not None:
            raise ValueError(f"{self.kind} layer carries no neurons")
        return self


# ═══════════════════════════════════════════════════════════════════════════════
# PARAMETER BLOCKS
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class BlockInfo:
    """
    Static description of one set of neuron groups.

    Dense, conv and classifier layers own one block; a decomposed pair owns
    a vertical and a horizontal block. Only non-classifier blocks are
    prunable and carry a lambda.
    """
    key: str
    layer_index: int
    stage: Literal["main", "vertical", "horizontal"]
    neuron_count: int
    fan_in_shape: Tuple[int, ...]
    prunable: bool

    @property
    def group_size(self) -> int:
        """P_l: weights of one neuron plus its bias"""
        return int(np.prod(self.fan_in_shape)) + 1

    @property
    def param_count(self) -> int:
        return self.neuron_count * self.group_size


def block_key(layer_index: int, stage: str) -> str:
    return f"layer{layer_index}" if stage == "main" else f"layer{layer_index}.{stage}"


# ═══════════════════════════════════════════════════════════════════════════════
# NETWORK SPEC
# ═══════════════════════════════════════════════════════════════════════════════

class NetworkSpec(BaseModel):
    """
    Ordered layer list, input shape and loss.

    input_shape is [D] for vector inputs or [C, H, W] for feature maps.
    The last layer must be the (single) classifier.
    """
    input_shape: List[int] = Field(..., min_length=1, max_length=3)
    layers: List[LayerSpec] = Field(..., min_length=1)
    loss: LossKind = "cross_entropy"

    @model_validator(mode="after")
    def _check_structure(self):
        if any(e < 1 for e in self.input_shape) or len(self.input_shape) == 2:
            raise ValueError("input_shape must be [D] or [C, H, W] with positive extents")
        kinds = [layer.kind for layer in self.layers]
        if kinds[-1] != "classifier" or kinds.count("classifier") != 1:
            raise ValueError("the last layer, and only the last, must be the classifier")
        if not any(layer.parameterized for layer in self.layers[:-1]):
            raise ValueError("at least one parameterized layer must precede the classifier")
        infer_shapes(self)
        return self

    @property
    def class_count(self) -> int:
        return self.layers[-1].neuron_count

    def output_shapes(self) -> List[Tuple[int, ...]]:
        return infer_shapes(self)

    def blocks(self) -> List[BlockInfo]:
        """Parameter blocks in declaration order"""
        blocks = []
        for i, layer in enumerate(self.layers):
            if not layer.parameterized:
                continue
            c = layer.input_channels
            if layer.kind in ("dense", "classifier"):
                blocks.append(BlockInfo(block_key(i, "main"), i, "main", layer.neuron_count, (c,),
                                        prunable=layer.kind != "classifier"))
            elif layer.kind == "decomposed_pair":
                d = layer.kernel_extent
                blocks.append(BlockInfo(block_key(i, "vertical"), i, "vertical", layer.shared_filters, (c, d), True))
                blocks.append(BlockInfo(block_key(i, "horizontal"), i, "horizontal", layer.neuron_count,
                                        (layer.shared_filters, d), True))
            else:
                blocks.append(BlockInfo(block_key(i, "main"), i, "main", layer.neuron_count,
                                        (c, layer.kernel_extent), True))
        return blocks

    def prunable_blocks(self) -> List[BlockInfo]:
        return [b for b in self.blocks() if b.prunable]

    def family(self) -> Tuple:
        """Widths-free signature shared by a network and its compacted form"""
        return (
            tuple(self.input_shape),
            self.loss,
            tuple((l.kind, l.kernel_extent, l.stride, l.effective_padding, l.pool_size) for l in self.layers),
            self.class_count,
        )


# ═══════════════════════════════════════════════════════════════════════════════
# SHAPE RULES
# ═══════════════════════════════════════════════════════════════════════════════

def infer_shapes(spec: NetworkSpec) -> List[Tuple[int, ...]]:
    """
    Propagate per-sample shapes through the layers.

    Fills each parameterized layer's input_channels and returns the output
    shape of every layer. Raises ValueError on incompatible neighbours.
    """
    shape = tuple(spec.input_shape)
    shapes = []
    for i, layer in enumerate(spec.layers):
        shape = _layer_output_shape(i, layer, shape)
        shapes.append(shape)
    return shapes


def _layer_output_shape(i: int, layer: LayerSpec, shape: Tuple[int, ...]) -> Tuple[int, ...]:
    if layer.kind in ("dense", "classifier"):
        _bind_channels(i, layer, int(np.prod(shape)))
        return (layer.neuron_count,)

    if layer.kind == "relu":
        return shape

    if len(shape) != 3:
        raise ValueError(f"layer {i} ({layer.kind}) needs a [C, H, W] input, got {list(shape)}")
    c, h, w = shape

    if layer.kind == "max_pool":
        if h // layer.pool_size < 1 or w // layer.pool_size < 1:
            raise ValueError(f"layer {i} pool window {layer.pool_size} exceeds feature map {h}x{w}")
        return (c, h // layer.pool_size, w // layer.pool_size)

    _bind_channels(i, layer, c)
    d, s, p = layer.kernel_extent, layer.stride, layer.effective_padding
    try:
        if layer.kind == "conv1d_vertical":
            return (layer.neuron_count, conv_output_length(h, d, s, p), w)
        if layer.kind == "conv1d_horizontal":
            return (layer.neuron_count, h, conv_output_length(w, d, s, p))
        return (layer.neuron_count, conv_output_length(h, d, s, p), conv_output_length(w, d, s, p))
    except Exception as e:
        raise ValueError(f"layer {i} ({layer.kind}): {e}") from e


def _bind_channels(i: int, layer: LayerSpec, channels: int):
    if layer.input_channels is None:
        layer.input_channels = channels
    elif layer.input_channels != channels:
        raise ValueError(
            f"layer {i} ({layer.kind}) declares input_channels={layer.input_channels} "
            f"but receives {channels}"
        )
