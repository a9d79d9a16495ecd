"""Cluster-level objectives: utilization, fairness loss, adjustment overhead."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .drf import actual_dominant_share, theoretical_shares
from .model import (AllocationMatrix, ApplicationSpec, ClusterSpec,
                    total_capacity)


@dataclass(frozen=True)
class MetricsSample:
    time: Fraction
    utilization: Fraction
    fairness_loss: Fraction
    adjustment_overhead: int
    per_resource_util: tuple[Fraction, ...]


def utilization(alloc: AllocationMatrix, apps: Mapping[str, ApplicationSpec],
                cluster: ClusterSpec) -> tuple[Fraction, list[Fraction]]:
    """Sum over resource types of the fraction of aggregate capacity in use."""
    totals = total_capacity(cluster)
    used = [Fraction(0)] * cluster.num_resources
    for (app_id, _), n in alloc.items():
        demand = apps[app_id].demand
        for k, d in enumerate(demand):
            used[k] += n * d
    per_resource = [used[k] / totals[k] for k in range(cluster.num_resources)]
    return sum(per_resource, Fraction(0)), per_resource


def fairness_loss(alloc: AllocationMatrix, apps: list[ApplicationSpec],
                  cluster: ClusterSpec,
                  shat: Mapping[str, Fraction] | None = None,
                  weighted: bool = True) -> Fraction:
    """Sum over apps of |actual dominant share - theoretical share|."""
    if shat is None:
        shat = theoretical_shares(apps, cluster, weighted=weighted)
    total = Fraction(0)
    for a in apps:
        s = actual_dominant_share(a, alloc, cluster)
        total += abs(s - shat[a.app_id])
    return total


def adjustment_flags(prev: AllocationMatrix, nxt: AllocationMatrix,
                     carryover_apps: Iterable[str],
                     slave_ids: Iterable[str]) -> dict[str, int]:
    """Per carryover app: 1 iff its per-slave container counts differ
    between the two allocations. Newly launched and completed apps are
    excluded (they are not in the carryover set)."""
    slave_ids = tuple(slave_ids)
    flags = {}
    for app_id in carryover_apps:
        changed = any(prev.get(app_id, s) != nxt.get(app_id, s) for s in slave_ids)
        flags[app_id] = 1 if changed else 0
    return flags


def adjustment_overhead(prev: AllocationMatrix, nxt: AllocationMatrix,
                        carryover_apps: Iterable[str],
                        slave_ids: Iterable[str]) -> int:
    """Number of carryover apps whose placement changed."""
    return sum(adjustment_flags(prev, nxt, carryover_apps, slave_ids).values())
