"""
Network package: specs, parameter containers, propagation and checkpoints.
"""

from core.network.checkpoint import load_checkpoint, save_checkpoint
from core.network.model import (
    Network,
    NeuronGroup,
    ParamBlock,
    ParamCount,
    count_params,
    init_network,
    zero_network,
)
from core.network.presets import dec3_spec, decn_spec, mlp_spec, scale_widths
from core.network.propagation import Activations, backward, decomposed_forward, forward, loss_and_grad, predict
from core.network.spec import BlockInfo, LayerSpec, NetworkSpec

__all__ = [
    "Activations",
    "BlockInfo",
    "LayerSpec",
    "Network",
    "NetworkSpec",
    "NeuronGroup",
    "ParamBlock",
    "ParamCount",
    "backward",
    "count_params",
    "dec3_spec",
    "decn_spec",
    "decomposed_forward",
    "forward",
    "init_network",
    "load_checkpoint",
    "loss_and_grad",
    "mlp_spec",
    "predict",
    "save_checkpoint",
    "scale_widths",
    "zero_network",
]
