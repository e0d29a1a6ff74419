"""Wire protocol documents, parsed into plain dataclasses.

One JSON document per line. The worker sends a hello document once at
startup, then answers each eval request with exactly one result or error
document echoing the request's trial_id:

  {"hello": {"protocol": 1, "name": "kws-trainer"}}
  {"eval": {"trial_id": 3, "arch": {...}, "solver": {...},
            "eval_samples": 100, "seed": 7}}
  {"result": {"trial_id": 3, "top1": 0.93, "evaluated_samples": 100}}
  {"error": {"trial_id": 3, "message": "..."}}

This module is self-contained on purpose: the worker's only coupling to the
search engine is the documents themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Tuple

PROTOCOL_VERSION = 1
WORKER_NAME = "kws-trainer"

PADDINGS = ("same", "valid")
OPTIMIZERS = ("adam", "sgd")


class ProtocolError(ValueError):
    """Raised when an incoming document does not follow the protocol."""


@dataclass(frozen=True)
class LayerSpec:
    kh: int
    kw: int
    m: int
    sh: int
    sw: int
    padding: str


@dataclass(frozen=True)
class ArchSpec:
    in_c: int
    in_h: int
    in_w: int
    layers: Tuple[LayerSpec, ...]


@dataclass(frozen=True)
class SolverSpec:
    optimizer: str
    lr: float
    batch: int
    iterations: int
    decay_factor: Optional[float] = None
    decay_every: Optional[int] = None


@dataclass(frozen=True)
class TrainRequest:
    trial_id: int
    arch: ArchSpec
    solver: SolverSpec
    eval_samples: int
    seed: int


def _positive_int(obj: Mapping, key: str, where: str) -> int:
    try:
        value = int(obj[key])
    except (KeyError, TypeError, ValueError):
        raise ProtocolError(f"{where}: missing or non-integer {key!r}") from None
    if value < 1:
        raise ProtocolError(f"{where}: {key} must be positive, got {value}")
    return value


def _parse_layer(obj: Mapping, index: int) -> LayerSpec:
    where = f"layer {index}"
    if not isinstance(obj, Mapping):
        raise ProtocolError(f"{where}: not an object")
    padding = obj.get("padding", "same")
    if padding not in PADDINGS:
        raise ProtocolError(f"{where}: unknown padding {padding!r}")
    return LayerSpec(
        kh=_positive_int(obj, "kh", where),
        kw=_positive_int(obj, "kw", where),
        m=_positive_int(obj, "m", where),
        sh=_positive_int(obj, "sh", where),
        sw=_positive_int(obj, "sw", where),
        padding=padding,
    )


def parse_arch(obj: Mapping) -> ArchSpec:
    if not isinstance(obj, Mapping):
        raise ProtocolError("arch: not an object")
    inp = obj.get("input")
    if not isinstance(inp, Mapping):
        raise ProtocolError("arch: missing input shape")
    layers_doc = obj.get("layers")
    if not isinstance(layers_doc, (list, tuple)) or not layers_doc:
        raise ProtocolError("arch: needs at least one layer")
    return ArchSpec(
        in_c=_positive_int(inp, "c", "input"),
        in_h=_positive_int(inp, "h", "input"),
        in_w=_positive_int(inp, "w", "input"),
        layers=tuple(_parse_layer(l, i) for i, l in enumerate(layers_doc)),
    )


def parse_solver(obj: Mapping) -> SolverSpec:
    if not isinstance(obj, Mapping):
        raise ProtocolError("solver: not an object")
    optimizer = obj.get("optimizer", "adam")
    if optimizer not in OPTIMIZERS:
        raise ProtocolError(f"solver: unknown optimizer {optimizer!r}")
    try:
        lr = float(obj["lr"])
    except (KeyError, TypeError, ValueError):
        raise ProtocolError("solver: missing or non-numeric lr") from None
    if not math.isfinite(lr) or lr <= 0:
        raise ProtocolError(f"solver: lr must be positive, got {lr}")
    decay = obj.get("decay")
    factor = every = None
    if decay is not None:
        if not isinstance(decay, Mapping):
            raise ProtocolError("solver: decay must be an object or null")
        try:
            factor = float(decay["factor"])
        except (KeyError, TypeError, ValueError):
            raise ProtocolError("solver: decay needs a numeric factor") from None
        if not 0 < factor <= 1:
            raise ProtocolError(f"solver: decay factor must be in (0, 1], got {factor}")
        every = _positive_int(decay, "every", "solver decay")
    return SolverSpec(
        optimizer=optimizer,
        lr=lr,
        batch=_positive_int(obj, "batch", "solver"),
        iterations=_positive_int(obj, "iterations", "solver"),
        decay_factor=factor,
        decay_every=every,
    )


def parse_request(obj: Mapping) -> TrainRequest:
    """Validate one incoming eval document."""
    if not isinstance(obj, Mapping) or "eval" not in obj:
        raise ProtocolError("expected an eval document")
    body = obj["eval"]
    if not isinstance(body, Mapping):
        raise ProtocolError("eval: not an object")
    try:
        trial_id = int(body["trial_id"])
    except (KeyError, TypeError, ValueError):
        raise ProtocolError("eval: missing or non-integer trial_id") from None
    try:
        seed = int(body.get("seed", 0))
    except (TypeError, ValueError):
        raise ProtocolError("eval: non-integer seed") from None
    return TrainRequest(
        trial_id=trial_id,
        arch=parse_arch(body.get("arch")),
        solver=parse_solver(body.get("solver")),
        eval_samples=_positive_int(body, "eval_samples", "eval"),
        seed=seed,
    )


def request_trial_id(obj) -> int:
    """Best-effort trial id of a document that failed validation."""
    try:
        return int(obj["eval"]["trial_id"])
    except (TypeError, KeyError, ValueError):
        return -1


def hello_doc() -> dict:
    return {"hello": {"protocol": PROTOCOL_VERSION, "name": WORKER_NAME}}


def result_doc(trial_id: int, top1: float, evaluated_samples: int) -> dict:
    return {
        "result": {
            "trial_id": trial_id,
            "top1": top1,
            "evaluated_samples": evaluated_samples,
        }
    }


def error_doc(trial_id: int, message: str) -> dict:
    return {"error": {"trial_id": trial_id, "message": message}}
