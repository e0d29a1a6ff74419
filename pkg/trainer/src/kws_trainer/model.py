"""Candidate network construction from a parsed architecture.

Each searched layer becomes one unit: zero padding (when the layer asks for
same-size output), a bias-free convolution, batch normalization with its
learned scale and shift, and ReLU. A global average pool and a dense layer
over the twelve labels close the stack.

Output sizes must agree exactly with the search engine's cost accounting:
same padding keeps ceil(size / stride) positions by padding asymmetrically
(the extra cell goes to the bottom/right), valid padding keeps
floor((size - kernel) / stride) + 1.
"""

from __future__ import annotations

import math
from typing import List, Tuple

import torch
from torch import nn

from .features import NUM_CLASSES
from .protocol import ArchSpec, LayerSpec, ProtocolError


def out_len(size: int, kernel: int, stride: int, padding: str) -> int:
    if padding == "same":
        return math.ceil(size / stride)
    if kernel > size:
        raise ProtocolError(f"kernel {kernel} exceeds input extent {size} under valid padding")
    return (size - kernel) // stride + 1


def same_pad(size: int, kernel: int, stride: int) -> Tuple[int, int]:
    """(leading, trailing) zero columns for ceil(size/stride) outputs."""
    out = math.ceil(size / stride)
    total = max((out - 1) * stride + kernel - size, 0)
    lead = total // 2
    return lead, total - lead


def stack_output_shape(arch: ArchSpec) -> Tuple[int, int, int]:
    """(channels, height, width) after the last unit."""
    c, h, w = arch.in_c, arch.in_h, arch.in_w
    for i, layer in enumerate(arch.layers):
        try:
            h = out_len(h, layer.kh, layer.sh, layer.padding)
            w = out_len(w, layer.kw, layer.sw, layer.padding)
        except ProtocolError as exc:
            raise ProtocolError(f"layer {i}: {exc}") from None
        if h < 1 or w < 1:
            raise ProtocolError(f"layer {i}: output collapses to {h}x{w}")
        c = layer.m
    return c, h, w


def _unit(in_c: int, in_h: int, in_w: int, layer: LayerSpec) -> List[nn.Module]:
    modules: List[nn.Module] = []
    if layer.padding == "same":
        top, bottom = same_pad(in_h, layer.kh, layer.sh)
        left, right = same_pad(in_w, layer.kw, layer.sw)
        if top or bottom or left or right:
            modules.append(nn.ZeroPad2d((left, right, top, bottom)))
    modules.append(
        nn.Conv2d(
            in_c,
            layer.m,
            kernel_size=(layer.kh, layer.kw),
            stride=(layer.sh, layer.sw),
            bias=False,
        )
    )
    modules.append(nn.BatchNorm2d(layer.m))
    modules.append(nn.ReLU())
    return modules


class TrainerNet(nn.Module):
    """Conv unit stack, global average pool, dense classifier."""

    def __init__(self, arch: ArchSpec):
        super().__init__()
        stack_output_shape(arch)  # reject collapsing shapes up front
        modules: List[nn.Module] = []
        c, h, w = arch.in_c, arch.in_h, arch.in_w
        for layer in arch.layers:
            modules.extend(_unit(c, h, w, layer))
            h = out_len(h, layer.kh, layer.sh, layer.padding)
            w = out_len(w, layer.kw, layer.sw, layer.padding)
            c = layer.m
        self.features = nn.Sequential(*modules)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.head = nn.Linear(c, NUM_CLASSES)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.features(x)
        x = self.pool(x).flatten(1)
        return self.head(x)


def build_model(arch: ArchSpec) -> TrainerNet:
    return TrainerNet(arch)


def conv_weight_count(model: TrainerNet) -> int:
    """Kernel weights of the conv stack only; bias, norm, and head excluded."""
    return sum(
        m.weight.numel() for m in model.features.modules() if isinstance(m, nn.Conv2d)
    )
