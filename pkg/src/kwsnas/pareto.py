"""Pareto dominance over (accuracy, cost) points and frontier statistics.

Accuracy is maximized and cost minimized. A point dominates another when it
is at least as good on both axes and strictly better on at least one.
Points that tie on both axes do not dominate each other, so duplicates of a
frontier point all stay on the frontier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .archspec import KIND_ORDER, Assignment, ParamId


@dataclass(frozen=True)
class ScoredPoint:
    """One evaluated candidate: its trial id, accuracy and operation count."""

    trial_id: int
    accuracy: float
    cost: int


def dominates(a: ScoredPoint, b: ScoredPoint) -> bool:
    """True when a is at least as good as b on both axes and better on one."""
    return (
        a.accuracy >= b.accuracy
        and a.cost <= b.cost
        and (a.accuracy > b.accuracy or a.cost < b.cost)
    )


def frontier(points: Iterable[ScoredPoint]) -> List[ScoredPoint]:
    """All points not dominated by any other point, in input order.

    Single cost-ordered sweep: a point survives when no strictly cheaper
    point matches its accuracy and nothing at the same cost beats it.
    """
    pts = list(points)
    order = sorted(range(len(pts)), key=lambda i: (pts[i].cost, -pts[i].accuracy))
    keep = [False] * len(pts)
    best_acc_cheaper = -math.inf
    i = 0
    while i < len(order):
        j = i
        cost = pts[order[i]].cost
        while j < len(order) and pts[order[j]].cost == cost:
            j += 1
        group = order[i:j]
        group_max = max(pts[g].accuracy for g in group)
        for g in group:
            acc = pts[g].accuracy
            keep[g] = acc > best_acc_cheaper and acc == group_max
        best_acc_cheaper = max(best_acc_cheaper, group_max)
        i = j
    return [p for p, k in zip(pts, keep) if k]


@dataclass(frozen=True)
class SettingHistogram:
    """Occurrence counts of (parameter, value) settings over n_points assignments."""

    counts: Tuple[Tuple[Tuple[ParamId, Union[int, float]], int], ...]
    n_points: int

    def as_dict(self) -> Dict[Tuple[ParamId, Union[int, float]], int]:
        return dict(self.counts)

    def count(self, pid: ParamId, value: Union[int, float]) -> int:
        return self.as_dict().get((pid, value), 0)


def common_settings(assignments: Sequence[Assignment]) -> SettingHistogram:
    """Histogram every (parameter, value) setting across the assignments.

    All assignments must name the same parameters; mixing assignments from
    different spaces is an error.
    """
    if not assignments:
        raise ValueError("no assignments to histogram")
    keys = frozenset(assignments[0])
    counts: Dict[Tuple[ParamId, Union[int, float]], int] = {}
    for a in assignments:
        if frozenset(a) != keys:
            raise ValueError("assignments name differing parameters (mixed spaces)")
        for pid, value in a.items():
            counts[(pid, value)] = counts.get((pid, value), 0) + 1
    ordered = sorted(counts.items(), key=lambda kv: (kv[0][0].sort_key(), kv[0][1]))
    return SettingHistogram(counts=tuple(ordered), n_points=len(assignments))


def most_common_setting(
    hist: SettingHistogram,
    exclude_frozen: Iterable[ParamId] = (),
) -> Tuple[ParamId, Union[int, float], float]:
    """The single most frequent setting and its support fraction.

    Parameters in `exclude_frozen` are skipped. Count ties break toward the
    lower layer index, then kind order kh < kw < m, then the smaller value.
    """
    excluded = frozenset(exclude_frozen)
    candidates = [
        (pid, value, count)
        for (pid, value), count in hist.counts
        if pid not in excluded
    ]
    if not candidates:
        raise ValueError("all parameters are frozen; nothing left to count")
    pid, value, count = min(
        candidates, key=lambda c: (-c[2], c[0].sort_key(), c[1])
    )
    return pid, value, count / hist.n_points
