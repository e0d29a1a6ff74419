"""Network architectures and the searchable space derived from a seed network.

A network is an ordered stack of convolution units over a single input
tensor. The searchable quantities are each unit's kernel height, kernel
width and filter count; stride and padding are fixed attributes of the seed
and are copied unchanged into every candidate. Solver settings (learning
rate, batch size, training iterations) can optionally be searched as well.

All types here are immutable values. Operations are pure functions that
return new values, so concurrent readers need no locking.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

SAME = "same"
VALID = "valid"
PADDINGS = (SAME, VALID)

LAYER_KINDS = ("kh", "kw", "m")
SOLVER_KINDS = ("lr", "batch", "iterations")
KIND_ORDER = {kind: i for i, kind in enumerate(LAYER_KINDS + SOLVER_KINDS)}

_PID_KEY_RE = re.compile(r"^(kh|kw|m)(\d+)$")


class ArchError(ValueError):
    """Raised when an architecture or search-space constraint is violated."""


def ceil_div(a: int, b: int) -> int:
    """Exact integer ceiling division, computed as (a + b - 1) // b."""
    return (a + b - 1) // b


@dataclass(frozen=True)
class TensorShape:
    """Channels-first feature map shape."""

    c: int
    h: int
    w: int


@dataclass(frozen=True)
class ConvLayerSpec:
    """One convolution unit: kernel, filter count, stride and padding.

    The unit's input channel count is not stored; it is always derived from
    the previous unit's filter count (or the network input) when shapes are
    propagated.
    """

    kh: int
    kw: int
    m: int
    sh: int = 1
    sw: int = 1
    padding: str = SAME

    def out_dims(self, h: int, w: int) -> Tuple[int, int]:
        """Spatial output dims over an h-by-w input."""
        if self.padding == SAME:
            return ceil_div(h, self.sh), ceil_div(w, self.sw)
        return (h - self.kh) // self.sh + 1, (w - self.kw) // self.sw + 1


@dataclass(frozen=True)
class NetworkArch:
    """A concrete network: input shape plus an ordered stack of conv units."""

    input: TensorShape
    layers: Tuple[ConvLayerSpec, ...]


@dataclass(frozen=True)
class DecaySpec:
    """Step learning-rate decay: multiply by `factor` every `every` iterations."""

    factor: float
    every: int


@dataclass(frozen=True)
class SolverSettings:
    """Training settings a candidate is evaluated under."""

    optimizer: str = "adam"
    lr: float = 1e-3
    batch: int = 25
    iterations: int = 8000
    decay: Optional[DecaySpec] = None

    def to_wire(self) -> dict:
        decay = None
        if self.decay is not None:
            decay = {"factor": self.decay.factor, "every": self.decay.every}
        return {
            "optimizer": self.optimizer,
            "lr": self.lr,
            "batch": self.batch,
            "iterations": self.iterations,
            "decay": decay,
        }

    @classmethod
    def from_wire(cls, obj: Mapping) -> "SolverSettings":
        decay = obj.get("decay")
        spec = None
        if decay is not None:
            spec = DecaySpec(factor=float(decay["factor"]), every=int(decay["every"]))
        return cls(
            optimizer=str(obj.get("optimizer", "adam")).lower(),
            lr=float(obj["lr"]),
            batch=int(obj["batch"]),
            iterations=int(obj["iterations"]),
            decay=spec,
        )


DEFAULT_SOLVER = SolverSettings()


@dataclass(frozen=True, order=True)
class ParamId:
    """Identity of one searchable quantity.

    Layer kinds ("kh", "kw", "m") carry the owning layer index; solver kinds
    ("lr", "batch", "iterations") carry no layer.
    """

    kind: str
    layer: Optional[int] = None

    def key(self) -> str:
        """Canonical string key, e.g. "kh0" or "lr"; used in logs and JSON."""
        if self.layer is None:
            return self.kind
        return f"{self.kind}{self.layer}"

    def sort_key(self) -> Tuple[int, int]:
        layer = self.layer if self.layer is not None else 1 << 30
        return layer, KIND_ORDER[self.kind]


def parse_pid_key(key: str) -> ParamId:
    match = _PID_KEY_RE.match(key)
    if match:
        return ParamId(kind=match.group(1), layer=int(match.group(2)))
    if key in SOLVER_KINDS:
        return ParamId(kind=key, layer=None)
    raise ArchError(f"unknown parameter key {key!r}")


# An assignment maps every searchable parameter to a concrete value.
Assignment = Dict[ParamId, Union[int, float]]


@dataclass(frozen=True)
class ParamDomain:
    """Closed value range for one parameter.

    Integer kinds take the values lower, lower+step, ... up to upper. The
    learning rate is continuous and sampled log-uniformly; its step is
    ignored. A frozen domain admits exactly its frozen value.
    """

    id: ParamId
    lower: Union[int, float]
    upper: Union[int, float]
    step: int = 1
    frozen: Optional[Union[int, float]] = None

    @property
    def is_continuous(self) -> bool:
        return self.id.kind == "lr"

    def cardinality(self) -> int:
        if self.is_continuous:
            raise ArchError(f"{self.id.key()}: continuous domain has no cardinality")
        return (int(self.upper) - int(self.lower)) // self.step + 1

    def grid(self) -> range:
        """All admissible values of an integer domain."""
        if self.is_continuous:
            raise ArchError(f"{self.id.key()}: continuous domain has no grid")
        return range(int(self.lower), int(self.upper) + 1, self.step)

    def contains(self, value: Union[int, float]) -> bool:
        if self.frozen is not None:
            return value == self.frozen
        if self.is_continuous:
            return self.lower <= value <= self.upper
        return (
            isinstance(value, int)
            and self.lower <= value <= self.upper
            and (value - int(self.lower)) % self.step == 0
        )


@dataclass(frozen=True)
class SearchSpace:
    """Seed network plus one domain per searchable parameter."""

    seed: NetworkArch
    domains: Tuple[ParamDomain, ...]
    solver_defaults: SolverSettings = DEFAULT_SOLVER

    def domain(self, pid: ParamId) -> ParamDomain:
        for dom in self.domains:
            if dom.id == pid:
                return dom
        raise ArchError(f"unknown parameter {pid.key()}")

    def frozen_ids(self) -> frozenset:
        return frozenset(d.id for d in self.domains if d.frozen is not None)


def validate_shape(shape: TensorShape) -> TensorShape:
    for name in ("c", "h", "w"):
        value = getattr(shape, name)
        if not isinstance(value, int) or value < 1:
            raise ArchError(f"input {name} must be a positive integer, got {value!r}")
    return shape


def validate_arch(arch: NetworkArch) -> NetworkArch:
    """Check every structural constraint of a network.

    Positivity of all fields, a known padding mode, and, for valid padding,
    that each unit's kernel fits inside its propagated input. Returns the
    architecture unchanged so calls can be inlined.
    """
    validate_shape(arch.input)
    if not arch.layers:
        raise ArchError("network has no layers")
    h, w = arch.input.h, arch.input.w
    for i, layer in enumerate(arch.layers):
        for name in ("kh", "kw", "m", "sh", "sw"):
            value = getattr(layer, name)
            if not isinstance(value, int) or value < 1:
                raise ArchError(f"layer {i}: {name} must be a positive integer, got {value!r}")
        if layer.padding not in PADDINGS:
            raise ArchError(f"layer {i}: unknown padding {layer.padding!r}")
        if layer.padding == VALID and (layer.kh > h or layer.kw > w):
            raise ArchError(
                f"layer {i}: kernel exceeds input ({layer.kh}x{layer.kw} over {h}x{w} "
                f"under valid padding)"
            )
        h, w = layer.out_dims(h, w)
        if h < 1 or w < 1:
            raise ArchError(f"layer {i}: output collapsed to {h}x{w}")
    return arch


def derive_space(
    seed: NetworkArch,
    *,
    later_k_upper: int = 5,
    m_step: int = 1,
    solver_defaults: SolverSettings = DEFAULT_SOLVER,
) -> SearchSpace:
    """Build the default searchable space around a seed network.

    Per layer, the filter count ranges over [1, seed m]. The first layer's
    kernel ranges over [1, seed kh] x [1, seed kw]; every later layer's
    kernel ranges over [1, later_k_upper] squared regardless of its seed
    value. Strides and padding are not searchable. Solver settings are not
    searched by default; `solver_defaults` records what evaluations use.
    """
    validate_arch(seed)
    domains: List[ParamDomain] = []
    for i, layer in enumerate(seed.layers):
        if i == 0:
            kh_upper, kw_upper = layer.kh, layer.kw
        else:
            kh_upper, kw_upper = later_k_upper, later_k_upper
        domains.append(ParamDomain(ParamId("kh", i), 1, kh_upper))
        domains.append(ParamDomain(ParamId("kw", i), 1, kw_upper))
        domains.append(ParamDomain(ParamId("m", i), 1, layer.m, step=m_step))
    return SearchSpace(seed=seed, domains=tuple(domains), solver_defaults=solver_defaults)


def add_solver_domains(
    space: SearchSpace,
    *,
    lr: Optional[Tuple[float, float]] = None,
    batch: Optional[Tuple[int, int, int]] = None,
    iterations: Optional[Tuple[int, int, int]] = None,
) -> SearchSpace:
    """Return a space that additionally searches the given solver ranges.

    `batch` and `iterations` are (lower, upper, step) triples; `lr` is a
    (lower, upper) pair searched log-uniformly.
    """
    domains = list(space.domains)
    if lr is not None:
        lo, hi = lr
        if not 0 < lo <= hi:
            raise ArchError(f"lr: invalid range [{lo}, {hi}]")
        domains.append(ParamDomain(ParamId("lr"), float(lo), float(hi)))
    if batch is not None:
        lo, hi, step = batch
        domains.append(ParamDomain(ParamId("batch"), lo, hi, step=step))
    if iterations is not None:
        lo, hi, step = iterations
        domains.append(ParamDomain(ParamId("iterations"), lo, hi, step=step))
    return replace(space, domains=tuple(domains))


def space_size(space: SearchSpace) -> int:
    """Number of distinct assignments; frozen domains contribute one point."""
    size = 1
    for dom in space.domains:
        if dom.frozen is not None:
            continue
        if dom.is_continuous:
            raise ArchError(f"{dom.id.key()}: size undefined over a continuous domain")
        size *= dom.cardinality()
    return size


def resolve_assignment(space: SearchSpace, assignment: Assignment) -> Assignment:
    """Validate an assignment against a space and fill in frozen values.

    Every unfrozen domain must be covered, every value must lie in its
    domain, a frozen parameter may only be restated at its frozen value, and
    no unknown parameter may appear.
    """
    known = {dom.id for dom in space.domains}
    for pid in assignment:
        if pid not in known:
            raise ArchError(f"assignment names unknown parameter {pid.key()}")
    resolved: Assignment = {}
    for dom in space.domains:
        if dom.frozen is not None:
            if dom.id in assignment and assignment[dom.id] != dom.frozen:
                raise ArchError(
                    f"{dom.id.key()}: assignment value {assignment[dom.id]!r} "
                    f"contradicts frozen value {dom.frozen!r}"
                )
            resolved[dom.id] = dom.frozen
            continue
        if dom.id not in assignment:
            raise ArchError(f"assignment missing parameter {dom.id.key()}")
        value = assignment[dom.id]
        if not dom.contains(value):
            raise ArchError(
                f"{dom.id.key()}: value {value!r} outside domain "
                f"[{dom.lower}, {dom.upper}] step {dom.step}"
            )
        resolved[dom.id] = value
    return resolved


def apply_assignment(space: SearchSpace, assignment: Assignment) -> NetworkArch:
    """Realize an assignment as a concrete network.

    Kernel sizes and filter counts come from the assignment (or frozen
    values); strides and padding are copied from the seed. The result is
    validated before it is returned.
    """
    values = resolve_assignment(space, assignment)
    layers = []
    for i, layer in enumerate(space.seed.layers):
        layers.append(
            replace(
                layer,
                kh=values[ParamId("kh", i)],
                kw=values[ParamId("kw", i)],
                m=values[ParamId("m", i)],
            )
        )
    return validate_arch(NetworkArch(input=space.seed.input, layers=tuple(layers)))


def extract_assignment(space: SearchSpace, arch: NetworkArch) -> Assignment:
    """Read a layer-parameter assignment back off a concrete network."""
    if len(arch.layers) != len(space.seed.layers):
        raise ArchError(
            f"network has {len(arch.layers)} layers, space expects {len(space.seed.layers)}"
        )
    assignment: Assignment = {}
    for i, layer in enumerate(arch.layers):
        assignment[ParamId("kh", i)] = layer.kh
        assignment[ParamId("kw", i)] = layer.kw
        assignment[ParamId("m", i)] = layer.m
    return assignment


def solver_for_assignment(space: SearchSpace, assignment: Assignment, base: SolverSettings) -> SolverSettings:
    """Overlay any searched solver values in `assignment` onto `base`."""
    values = resolve_assignment(space, assignment)
    updates = {}
    for pid, value in values.items():
        if pid.kind == "lr":
            updates["lr"] = float(value)
        elif pid.kind == "batch":
            updates["batch"] = int(value)
        elif pid.kind == "iterations":
            updates["iterations"] = int(value)
    return replace(base, **updates) if updates else base


def freeze_param(space: SearchSpace, pid: ParamId, value: Union[int, float]) -> SearchSpace:
    """Pin one parameter to a single value for the rest of the search.

    Freezing an already-frozen parameter at the same value is a no-op;
    freezing it at a different value is an error.
    """
    domains = list(space.domains)
    for i, dom in enumerate(domains):
        if dom.id != pid:
            continue
        if dom.frozen is not None:
            if dom.frozen == value:
                return space
            raise ArchError(
                f"{pid.key()}: already frozen at {dom.frozen!r}, cannot refreeze at {value!r}"
            )
        if not dom.contains(value):
            raise ArchError(
                f"{pid.key()}: freeze value {value!r} outside domain [{dom.lower}, {dom.upper}]"
            )
        domains[i] = replace(dom, frozen=value)
        return replace(space, domains=tuple(domains))
    raise ArchError(f"unknown parameter {pid.key()}")


# ---------------------------------------------------------------------------
# JSON serialization


def assignment_to_json(assignment: Assignment) -> Dict[str, Union[int, float]]:
    return {pid.key(): value for pid, value in assignment.items()}


def assignment_from_json(obj: Mapping[str, Union[int, float]]) -> Assignment:
    assignment: Assignment = {}
    for key, value in obj.items():
        pid = parse_pid_key(key)
        if pid.kind == "lr":
            assignment[pid] = float(value)
        else:
            assignment[pid] = int(value)
    return assignment


def arch_to_dict(arch: NetworkArch) -> dict:
    return {
        "input": {"c": arch.input.c, "h": arch.input.h, "w": arch.input.w},
        "layers": [
            {
                "kh": l.kh,
                "kw": l.kw,
                "m": l.m,
                "sh": l.sh,
                "sw": l.sw,
                "padding": l.padding,
            }
            for l in arch.layers
        ],
    }


def arch_from_dict(obj: Mapping) -> NetworkArch:
    try:
        inp = obj["input"]
        shape = TensorShape(c=int(inp["c"]), h=int(inp["h"]), w=int(inp["w"]))
        layers = tuple(
            ConvLayerSpec(
                kh=int(l["kh"]),
                kw=int(l["kw"]),
                m=int(l["m"]),
                sh=int(l.get("sh", 1)),
                sw=int(l.get("sw", 1)),
                padding=str(l.get("padding", SAME)),
            )
            for l in obj["layers"]
        )
    except (KeyError, TypeError) as exc:
        raise ArchError(f"malformed architecture document: {exc}") from exc
    return NetworkArch(input=shape, layers=layers)


def arch_canonical_json(arch: NetworkArch) -> str:
    """Stable textual identity of a network; used for seeding and tags."""
    return json.dumps(arch_to_dict(arch), sort_keys=True, separators=(",", ":"))


def _domain_to_dict(dom: ParamDomain) -> dict:
    out: dict = {"kind": dom.id.kind, "lower": dom.lower, "upper": dom.upper}
    if dom.id.layer is not None:
        out["layer"] = dom.id.layer
    if dom.step != 1:
        out["step"] = dom.step
    if dom.frozen is not None:
        out["frozen"] = dom.frozen
    return out


def _domain_from_dict(obj: Mapping) -> ParamDomain:
    kind = str(obj["kind"])
    layer = obj.get("layer")
    if kind in LAYER_KINDS and layer is None:
        raise ArchError(f"domain of kind {kind!r} needs a layer index")
    if kind in SOLVER_KINDS and layer is not None:
        raise ArchError(f"domain of kind {kind!r} must not carry a layer index")
    pid = ParamId(kind=kind, layer=int(layer) if layer is not None else None)
    if kind == "lr":
        lower: Union[int, float] = float(obj["lower"])
        upper: Union[int, float] = float(obj["upper"])
    else:
        lower, upper = int(obj["lower"]), int(obj["upper"])
    frozen = obj.get("frozen")
    if frozen is not None:
        frozen = float(frozen) if kind == "lr" else int(frozen)
    return ParamDomain(pid, lower, upper, step=int(obj.get("step", 1)), frozen=frozen)


def space_to_dict(space: SearchSpace) -> dict:
    out = arch_to_dict(space.seed)
    out["domains"] = [_domain_to_dict(d) for d in space.domains]
    out["solver_defaults"] = space.solver_defaults.to_wire()
    return out


def space_from_dict(obj: Mapping) -> SearchSpace:
    seed = validate_arch(arch_from_dict(obj))
    if "domains" not in obj:
        raise ArchError("space document has no domains")
    domains = tuple(_domain_from_dict(d) for d in obj["domains"])
    seen = set()
    for dom in domains:
        if dom.id in seen:
            raise ArchError(f"duplicate domain for {dom.id.key()}")
        seen.add(dom.id)
        if dom.id.layer is not None and not 0 <= dom.id.layer < len(seed.layers):
            raise ArchError(f"domain {dom.id.key()} names a layer outside the seed network")
        if dom.lower > dom.upper:
            raise ArchError(f"domain {dom.id.key()}: lower {dom.lower} above upper {dom.upper}")
        if dom.frozen is not None and not replace(dom, frozen=None).contains(dom.frozen):
            raise ArchError(f"domain {dom.id.key()}: frozen value outside bounds")
    solver = obj.get("solver_defaults")
    defaults = SolverSettings.from_wire(solver) if solver else DEFAULT_SOLVER
    return SearchSpace(seed=seed, domains=domains, solver_defaults=defaults)


def load_arch(path: Union[str, Path]) -> NetworkArch:
    return validate_arch(arch_from_dict(_load_json(path)))


def load_space(path: Union[str, Path]) -> SearchSpace:
    return space_from_dict(_load_json(path))


def save_space(space: SearchSpace, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(space_to_dict(space), indent=2) + "\n")


def _load_json(path: Union[str, Path]):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ArchError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ArchError(f"{path} is not valid JSON: {exc}") from exc
