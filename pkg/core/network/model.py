"""
Network Parameters

Parameter containers organized as neuron groups: each ParamBlock stores the
weights of its N neurons as one (N, *fan_in) array plus an (N,) bias vector,
and exposes every neuron as a NeuronGroup theta = [w, b].
"""

from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from core.errors import ContractError, ShapeError
from core.network.spec import BlockInfo, NetworkSpec
from infra.logger import logger_network


# ═══════════════════════════════════════════════════════════════════════════════
# NEURON GROUP
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass
class NeuronGroup:
    """The parameter block of one neuron: its weights and its bias"""
    weights: np.ndarray
    bias: float

    @property
    def size(self) -> int:
        return self.weights.size + 1

    def flatten(self) -> np.ndarray:
        """Weights in row-major order followed by the bias"""
        return np.append(self.weights.ravel(), self.bias)


# ═══════════════════════════════════════════════════════════════════════════════
# PARAMETER BLOCK
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass
class ParamBlock:
    """
    All neuron groups of one layer stage.

    Attributes:
        key: Block key ("layer0", "layer2.vertical", ...)
        weights: Array of shape (N, *fan_in)
        bias: Array of shape (N,)
        prunable: False for the classifier
    """
    key: str
    weights: np.ndarray
    bias: np.ndarray
    prunable: bool = True

    @property
    def neuron_count(self) -> int:
        return self.weights.shape[0]

    @property
    def fan_in_shape(self):
        return self.weights.shape[1:]

    @property
    def group_size(self) -> int:
        return int(np.prod(self.fan_in_shape)) + 1

    @property
    def param_count(self) -> int:
        return self.weights.size + self.bias.size

    def group(self, n: int) -> NeuronGroup:
        return NeuronGroup(weights=self.weights[n].copy(), bias=float(self.bias[n]))

    def groups(self) -> List[NeuronGroup]:
        return [self.group(n) for n in range(self.neuron_count)]

    def flat_group(self, n: int) -> np.ndarray:
        return self.group(n).flatten()

    def set_flat_group(self, n: int, flat: np.ndarray):
        """Overwrite neuron n in place from a flattened group"""
        if flat.size != self.group_size:
            raise ShapeError("Flat group size mismatch", flat.shape, (self.group_size,))
        self.weights[n] = flat[:-1].reshape(self.fan_in_shape)
        self.bias[n] = flat[-1]

    def flat_groups(self) -> np.ndarray:
        """(N, P) matrix, one flattened group per row"""
        return np.concatenate([self.weights.reshape(self.neuron_count, -1), self.bias[:, None]], axis=1)

    def zero_mask(self, epsilon: float = 0.0) -> np.ndarray:
        """Boolean (N,) mask of neurons whose whole group is (near) zero"""
        flat = np.abs(self.flat_groups())
        return np.all(flat <= epsilon, axis=1) if epsilon > 0 else ~np.any(flat, axis=1)

    def copy(self) -> "ParamBlock":
        return ParamBlock(self.key, self.weights.copy(), self.bias.copy(), self.prunable)

    def zeros_like(self) -> "ParamBlock":
        return ParamBlock(self.key, np.zeros_like(self.weights), np.zeros_like(self.bias), self.prunable)


# ═══════════════════════════════════════════════════════════════════════════════
# NETWORK
# ═══════════════════════════════════════════════════════════════════════════════

class Network:
    """
    A NetworkSpec together with its parameter set Theta.

    Any in-place parameter change must be followed by touch() so that
    activations recorded before the change are recognised as stale.
    """

    def __init__(self, spec: NetworkSpec, blocks: List[ParamBlock]):
        infos = spec.blocks()
        if len(infos) != len(blocks):
            raise ContractError(f"Spec declares {len(infos)} parameter blocks, got {len(blocks)}")
        for info, block in zip(infos, blocks):
            _check_block(info, block)
        self.spec = spec
        self.blocks = blocks
        self._by_key = {b.key: b for b in blocks}
        self.revision = 0

    def block(self, key: str) -> ParamBlock:
        return self._by_key[key]

    def layer_blocks(self, layer_index: int) -> List[ParamBlock]:
        return [self._by_key[info.key] for info in self.spec.blocks() if info.layer_index == layer_index]

    def prunable_blocks(self) -> List[ParamBlock]:
        return [b for b in self.blocks if b.prunable]

    def classifier_block(self) -> ParamBlock:
        return self.blocks[-1]

    @property
    def params(self) -> Dict[str, List[NeuronGroup]]:
        """Theta as neuron groups, keyed by block"""
        return {b.key: b.groups() for b in self.blocks}

    def widths(self) -> Dict[str, int]:
        return {b.key: b.neuron_count for b in self.prunable_blocks()}

    def touch(self):
        self.revision += 1

    def copy(self) -> "Network":
        return Network(self.spec.model_copy(deep=True), [b.copy() for b in self.blocks])


def _check_block(info: BlockInfo, block: ParamBlock):
    expected = (info.neuron_count,) + tuple(info.fan_in_shape)
    if block.key != info.key or block.weights.shape != expected or block.bias.shape != (info.neuron_count,):
        raise ContractError(
            f"Block {block.key} has weights {list(block.weights.shape)} / bias {list(block.bias.shape)}, "
            f"spec expects {info.key} with {list(expected)}"
        )
    if block.prunable != info.prunable:
        raise ContractError(f"Block {block.key} prunable flag disagrees with the spec")


# ═══════════════════════════════════════════════════════════════════════════════
# CONSTRUCTION
# ═══════════════════════════════════════════════════════════════════════════════

def init_network(spec: NetworkSpec, seed: int = 0) -> Network:
    """
    Instantiate a network with seeded Gaussian groups.

    Every entry of a group, bias included, is drawn from N(0, 2 / P_l).
    """
    rng = np.random.default_rng(seed)
    blocks = []
    for info in spec.blocks():
        std = np.sqrt(2.0 / info.group_size)
        flat = rng.normal(0.0, std, size=(info.neuron_count, info.group_size))
        weights = flat[:, :-1].reshape((info.neuron_count,) + tuple(info.fan_in_shape)).copy()
        bias = flat[:, -1].copy()
        blocks.append(ParamBlock(info.key, weights, bias, info.prunable))
    net = Network(spec, blocks)
    logger_network.debug(f"NETWORK_INIT | blocks={len(blocks)} | seed={seed}")
    return net


def zero_network(spec: NetworkSpec) -> Network:
    """Instantiate a network with every parameter set to 0.0"""
    blocks = [
        ParamBlock(
            info.key,
            np.zeros((info.neuron_count,) + tuple(info.fan_in_shape)),
            np.zeros(info.neuron_count),
            info.prunable,
        )
        for info in spec.blocks()
    ]
    return Network(spec, blocks)


# ═══════════════════════════════════════════════════════════════════════════════
# PARAMETER COUNTING
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass
class ParamCount:
    per_block: Dict[str, int]
    prunable: int
    classifier: int

    @property
    def total(self) -> int:
        return self.prunable + self.classifier


def count_params(net: Network) -> ParamCount:
    """Per-block and total parameter counts (sum of N_l * P_l plus classifier)"""
    per_block = {b.key: b.neuron_count * b.group_size for b in net.blocks}
    prunable = sum(per_block[b.key] for b in net.prunable_blocks())
    classifier = per_block[net.classifier_block().key]
    return ParamCount(per_block=per_block, prunable=prunable, classifier=classifier)
