"""Tree-structured Parzen estimator over integer and log-uniform domains.

The sampler keeps an append-only observation history. Once enough history
exists, observations are split into a good set (the best max(1, ceil(gamma
* n)) by objective, ties at the boundary resolved toward earlier
observations) and a bad set. For each parameter two densities are fitted:

  integer kinds   one truncated Gaussian kernel per observed value, centered
                  on it, bandwidth max(1, span / max(1, sqrt(n_group))) on
                  the domain grid, discretized by integrating unit bins and
                  renormalizing over the domain, plus one uniform component;
                  the mixture weighs all components equally.
  learning rate   truncated Gaussian kernels in log space with bandwidth
                  span / max(1, sqrt(n_group)), plus a uniform component
                  over the log range, equally weighted.

A batch of candidates is drawn from the good density and the candidate
maximizing the likelihood ratio l(x)/g(x), multiplied across parameters, is
suggested. Before the history reaches n_startup the sampler falls back to
seeded uniform draws that do not depend on the history at all.

All randomness is derived from (rng_seed, draw index) through a stable
hash, so identical (seed, history, space) reproduce identical suggestions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import ndtr, ndtri

from .archspec import Assignment, ParamDomain, ParamId, SearchSpace, resolve_assignment
from .hashing import stable_u64

DEFAULT_GAMMA = 0.25
DEFAULT_N_STARTUP = 20
DEFAULT_N_CANDIDATES = 24

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class InsufficientHistoryError(ValueError):
    """Raised when a density query needs more history than the state holds."""


@dataclass(frozen=True)
class Observation:
    """One evaluated assignment and its objective (higher is better)."""

    assignment: Assignment
    objective: float


@dataclass(frozen=True)
class TpeState:
    """Immutable sampler state; observe() returns an extended copy."""

    observations: Tuple[Observation, ...] = ()
    gamma: float = DEFAULT_GAMMA
    n_startup: int = DEFAULT_N_STARTUP
    n_candidates: int = DEFAULT_N_CANDIDATES
    rng_seed: int = 0


def observe(state: TpeState, obs: Observation, space: Optional[SearchSpace] = None) -> TpeState:
    """Append one observation, preserving order and duplicates.

    When a space is given the assignment is validated against it.
    """
    if not math.isfinite(obs.objective):
        raise ValueError(f"objective must be finite, got {obs.objective!r}")
    if space is not None:
        resolve_assignment(space, obs.assignment)
    return replace(state, observations=state.observations + (obs,))


def _split(state: TpeState) -> Tuple[List[Observation], List[Observation]]:
    obs = state.observations
    n = len(obs)
    n_good = max(1, math.ceil(state.gamma * n))
    order = sorted(range(n), key=lambda i: (-obs[i].objective, i))
    good_idx = frozenset(order[:n_good])
    good = [obs[i] for i in range(n) if i in good_idx]
    bad = [obs[i] for i in range(n) if i not in good_idx]
    return good, bad


class _IntDensity:
    """Discrete Parzen mixture over an integer domain's grid."""

    def __init__(self, dom: ParamDomain, values: Sequence[int]):
        self.lower = int(dom.lower)
        self.step = dom.step
        m = dom.cardinality()
        self.m = m
        n = len(values)
        rows = []
        if n:
            sigma = max(1.0, (m - 1) / max(1.0, math.sqrt(n)))
            edges = np.arange(m + 1, dtype=float) - 0.5
            for v in values:
                center = (int(v) - self.lower) // self.step
                probs = np.diff(ndtr((edges - center) / sigma))
                rows.append(probs / probs.sum())
        rows.append(np.full(m, 1.0 / m))  # uniform component
        self.comp_probs = np.vstack(rows)
        self.pdf_table = self.comp_probs.mean(axis=0)
        self.cum_probs = np.cumsum(self.comp_probs, axis=1)

    def _index(self, value: Union[int, float]) -> int:
        idx = (int(value) - self.lower) // self.step
        if not 0 <= idx < self.m:
            raise ValueError(f"value {value!r} outside domain grid")
        return idx

    def pdf(self, value: Union[int, float]) -> float:
        return float(self.pdf_table[self._index(value)])

    def sample(self, rng: np.random.Generator) -> int:
        n_comp = self.comp_probs.shape[0]
        comp = min(int(rng.random() * n_comp), n_comp - 1)
        idx = int(np.searchsorted(self.cum_probs[comp], rng.random(), side="right"))
        idx = min(idx, self.m - 1)
        return self.lower + idx * self.step


class _LogDensity:
    """Truncated-Gaussian Parzen mixture in log space for the learning rate."""

    def __init__(self, dom: ParamDomain, values: Sequence[float]):
        self.value_lo = float(dom.lower)
        self.value_hi = float(dom.upper)
        self.lo = math.log(self.value_lo)
        self.hi = math.log(self.value_hi)
        self.span = self.hi - self.lo
        self.comps: List[Tuple[float, float, float, float]] = []
        if self.span <= 0:
            return
        n = len(values)
        if n:
            sigma = max(self.span / max(1.0, math.sqrt(n)), self.span * 1e-3)
            for v in values:
                center = math.log(float(v))
                a = float(ndtr((self.lo - center) / sigma))
                b = float(ndtr((self.hi - center) / sigma))
                self.comps.append((center, sigma, a, b))

    def pdf(self, value: Union[int, float]) -> float:
        if self.span <= 0:
            return 1.0
        z = math.log(float(value))
        if not self.lo <= z <= self.hi:
            raise ValueError(f"value {value!r} outside domain")
        total = 1.0 / self.span  # uniform component
        for center, sigma, a, b in self.comps:
            t = (z - center) / sigma
            total += math.exp(-0.5 * t * t) / (sigma * _SQRT_2PI) / (b - a)
        return total / (len(self.comps) + 1)

    def sample(self, rng: np.random.Generator) -> float:
        if self.span <= 0:
            return self.value_lo
        n_comp = len(self.comps) + 1
        comp = min(int(rng.random() * n_comp), n_comp - 1)
        if comp == n_comp - 1:
            z = self.lo + rng.random() * self.span
        else:
            center, sigma, a, b = self.comps[comp]
            p = a + rng.random() * (b - a)
            p = min(max(p, 1e-12), 1.0 - 1e-12)
            z = center + sigma * float(ndtri(p))
        return min(max(math.exp(z), self.value_lo), self.value_hi)


_Density = Union[_IntDensity, _LogDensity]


def _sorted_domains(space: SearchSpace) -> List[ParamDomain]:
    return sorted(space.domains, key=lambda d: d.id.sort_key())


def _fit_models(state: TpeState, space: SearchSpace) -> Dict[ParamId, Tuple[_Density, _Density]]:
    good, bad = _split(state)
    models: Dict[ParamId, Tuple[_Density, _Density]] = {}
    for dom in _sorted_domains(space):
        if dom.frozen is not None:
            continue
        try:
            gvals = [o.assignment[dom.id] for o in good]
            bvals = [o.assignment[dom.id] for o in bad]
        except KeyError as exc:
            raise ValueError(f"observation missing parameter {dom.id.key()}") from exc
        density = _LogDensity if dom.is_continuous else _IntDensity
        models[dom.id] = (density(dom, gvals), density(dom, bvals))
    return models


def _ratio(models: Dict[ParamId, Tuple[_Density, _Density]], assignment: Assignment) -> float:
    ratio = 1.0
    for pid, (l, g) in models.items():
        value = assignment[pid]
        ratio *= l.pdf(value) / g.pdf(value)
    return ratio


def _uniform_value(rng: np.random.Generator, dom: ParamDomain):
    if dom.is_continuous:
        lo, hi = math.log(float(dom.lower)), math.log(float(dom.upper))
        return min(max(math.exp(lo + rng.random() * (hi - lo)), float(dom.lower)), float(dom.upper))
    m = dom.cardinality()
    idx = min(int(rng.random() * m), m - 1)
    return int(dom.lower) + idx * dom.step


def _draw_rng(state: TpeState, draw: Optional[int]) -> np.random.Generator:
    k = draw if draw is not None else len(state.observations)
    return np.random.default_rng(stable_u64(state.rng_seed, "draw", k))


def suggest(
    state: TpeState,
    space: SearchSpace,
    draw: Optional[int] = None,
    return_candidates: bool = False,
) -> Union[Assignment, Tuple[Assignment, List[Tuple[Assignment, float]]]]:
    """Propose the next assignment to evaluate.

    `draw` salts the per-call RNG; callers that may re-suggest without
    observing in between (e.g. after a failed evaluation) should pass their
    own proposal counter. When omitted, the history length is used, which
    keeps plain suggest/observe loops deterministic. Frozen parameters are
    always emitted at their frozen value. With return_candidates=True the
    scored candidate batch is returned as well (model phase only).
    """
    rng = _draw_rng(state, draw)
    frozen = {dom.id: dom.frozen for dom in space.domains if dom.frozen is not None}
    unfrozen = [d for d in _sorted_domains(space) if d.frozen is None]

    if len(state.observations) < state.n_startup or not unfrozen:
        assignment: Assignment = dict(frozen)
        for dom in unfrozen:
            assignment[dom.id] = _uniform_value(rng, dom)
        return (assignment, []) if return_candidates else assignment

    models = _fit_models(state, space)
    scored: List[Tuple[Assignment, float]] = []
    for _ in range(state.n_candidates):
        cand: Assignment = dict(frozen)
        for dom in unfrozen:
            cand[dom.id] = models[dom.id][0].sample(rng)
        scored.append((cand, _ratio(models, cand)))
    best = max(scored, key=lambda cs: cs[1])[0]
    return (best, scored) if return_candidates else best


def density_ratio(state: TpeState, space: SearchSpace, assignment: Assignment) -> float:
    """The aggregated likelihood ratio l(x)/g(x) suggest ranks candidates by.

    Requires at least n_startup observations; before that no densities
    exist. Frozen parameters contribute a factor of one.
    """
    if len(state.observations) < state.n_startup:
        raise InsufficientHistoryError(
            f"need {state.n_startup} observations, have {len(state.observations)}"
        )
    values = resolve_assignment(space, assignment)
    return _ratio(_fit_models(state, space), values)
