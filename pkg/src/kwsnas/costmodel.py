"""Analytic operation and weight counts for convolution stacks.

Counting convention: producing one output point of one feature map takes,
per input channel, one multiply and one accumulate per kernel tap, plus one
addition per channel to combine the per-channel partial sums. A layer with
M filters over C input channels therefore costs

    ops(layer) = M * C * outH * outW * (2 * kh * kw + 1)

and carries M * C * kh * kw weights. Under same padding the output grid is
ceil(H / sh) by ceil(W / sw); under valid padding it is the number of
kernel placements that fit. All arithmetic is exact Python integer
arithmetic end to end; nothing is rounded through floating point and large
counts cannot overflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

from .archspec import (
    SAME,
    VALID,
    ArchError,
    ConvLayerSpec,
    NetworkArch,
    TensorShape,
    ceil_div,
    validate_arch,
    validate_shape,
)

NAIVE_TRIP_LIMIT = 1_000_000_000


@dataclass(frozen=True)
class LayerCost:
    ops: int
    params: int
    in_shape: TensorShape
    out_shape: TensorShape


@dataclass(frozen=True)
class NetworkCost:
    per_layer: Tuple[LayerCost, ...]
    total_ops: int
    total_params: int


def _check_layer(layer: ConvLayerSpec, in_shape: TensorShape) -> None:
    validate_shape(in_shape)
    for name in ("kh", "kw", "m", "sh", "sw"):
        value = getattr(layer, name)
        if not isinstance(value, int) or value < 1:
            raise ArchError(f"{name} must be a positive integer, got {value!r}")
    if layer.padding not in (SAME, VALID):
        raise ArchError(f"unknown padding {layer.padding!r}")
    if layer.padding == VALID and (layer.kh > in_shape.h or layer.kw > in_shape.w):
        raise ArchError(
            f"kernel exceeds input ({layer.kh}x{layer.kw} over {in_shape.h}x{in_shape.w} "
            f"under valid padding)"
        )


def out_shape(layer: ConvLayerSpec, in_shape: TensorShape) -> TensorShape:
    """Output feature-map shape of one layer over the given input."""
    _check_layer(layer, in_shape)
    oh, ow = layer.out_dims(in_shape.h, in_shape.w)
    return TensorShape(c=layer.m, h=oh, w=ow)


def layer_ops(layer: ConvLayerSpec, in_shape: TensorShape) -> int:
    """Exact forward-pass multiply/add count of one layer."""
    shape = out_shape(layer, in_shape)
    return layer.m * in_shape.c * shape.h * shape.w * (2 * layer.kh * layer.kw + 1)


def layer_params(layer: ConvLayerSpec, in_shape: TensorShape) -> int:
    """Exact weight count of one layer."""
    _check_layer(layer, in_shape)
    return layer.m * in_shape.c * layer.kh * layer.kw


def layer_cost(layer: ConvLayerSpec, in_shape: TensorShape) -> LayerCost:
    shape = out_shape(layer, in_shape)
    return LayerCost(
        ops=layer_ops(layer, in_shape),
        params=layer_params(layer, in_shape),
        in_shape=in_shape,
        out_shape=shape,
    )


def network_cost(arch: NetworkArch) -> NetworkCost:
    """Per-layer and total cost of a network, chaining shapes layer to layer.

    Layer i+1 sees layer i's filter count as its channel count, so the total
    is sensitive to layer order, not just the multiset of layers.
    """
    validate_arch(arch)
    costs: List[LayerCost] = []
    shape = arch.input
    for layer in arch.layers:
        cost = layer_cost(layer, shape)
        costs.append(cost)
        shape = cost.out_shape
    return NetworkCost(
        per_layer=tuple(costs),
        total_ops=sum(c.ops for c in costs),
        total_params=sum(c.params for c in costs),
    )


def _anchor_positions(size: int, k: int, stride: int, padding: str) -> List[int]:
    # Walk the input instead of using the closed-form output-size expressions.
    positions = []
    anchor = 0
    if padding == SAME:
        while anchor < size:
            positions.append(anchor)
            anchor += stride
    else:
        while anchor + k <= size:
            positions.append(anchor)
            anchor += stride
    return positions


def naive_count_oracle(layer: ConvLayerSpec, in_shape: TensorShape) -> int:
    """Count multiplies and adds by enumerating the convolution itself.

    Output positions are found by walking the input grid placement by
    placement, kernel work is tallied tap by tap and channel by channel, and
    identical per-filter work is summed filter by filter. No closed-form
    ceiling or floor expression is used anywhere, so this is an independent
    check on layer_ops. Only suitable for small layers; guarded by
    NAIVE_TRIP_LIMIT on the full conceptual trip count.
    """
    _check_layer(layer, in_shape)
    rows = _anchor_positions(in_shape.h, layer.kh, layer.sh, layer.padding)
    cols = _anchor_positions(in_shape.w, layer.kw, layer.sw, layer.padding)
    trips = layer.m * in_shape.c * len(rows) * len(cols) * layer.kh * layer.kw
    if trips > NAIVE_TRIP_LIMIT:
        raise ArchError(f"oracle trip count {trips} exceeds limit {NAIVE_TRIP_LIMIT}")

    per_window = 0
    for _ky in range(layer.kh):
        for _kx in range(layer.kw):
            per_window += 2  # one multiply, one accumulate
    per_point = 0
    for _c in range(in_shape.c):
        per_point += per_window + 1  # plus this channel's term in the cross-channel sum
    per_map = 0
    for _row in rows:
        for _col in cols:
            per_map += per_point
    total = 0
    for _m in range(layer.m):
        total += per_map
    return total


def mflops(ops: int) -> str:
    """Render an operation count in millions with two decimals."""
    return f"{ops / 1e6:.2f}"
