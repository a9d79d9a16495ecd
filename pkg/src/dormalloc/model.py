"""Shared domain types: cluster topology, resource vectors, application
specs and allocation matrices.

All quantities are exact rationals (fractions.Fraction) so capacity
feasibility can be checked without tolerance drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping


def as_frac(v) -> Fraction:
    """Convert ints, Fractions and decimal strings to Fraction.

    Floats are routed through str() so that "0.1" means 1/10, not the
    binary float closest to it.
    """
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return Fraction(str(v))
    return Fraction(v)


class ResourceVector:
    """Immutable vector of per-resource amounts, one entry per resource type."""

    __slots__ = ("quantities",)

    def __init__(self, quantities: Iterable):
        qs = tuple(as_frac(q) for q in quantities)
        if any(q < 0 for q in qs):
            raise ValueError("resource quantities must be non-negative")
        object.__setattr__(self, "quantities", qs)

    def __setattr__(self, *a):
        raise AttributeError("ResourceVector is immutable")

    def __len__(self):
        return len(self.quantities)

    def __getitem__(self, k: int) -> Fraction:
        return self.quantities[k]

    def __iter__(self):
        return iter(self.quantities)

    def __reduce__(self):
        return (ResourceVector, (list(self.quantities),))

    def __eq__(self, other):
        return isinstance(other, ResourceVector) and self.quantities == other.quantities

    def __hash__(self):
        return hash(self.quantities)

    def __repr__(self):
        return f"ResourceVector({[str(q) for q in self.quantities]})"

    def __add__(self, other: "ResourceVector") -> "ResourceVector":
        if len(self) != len(other):
            raise ValueError("dimension mismatch")
        return ResourceVector(a + b for a, b in zip(self, other))

    def scale(self, factor) -> "ResourceVector":
        f = as_frac(factor)
        return ResourceVector(q * f for q in self.quantities)


@dataclass(frozen=True)
class ClusterSpec:
    """Slave capacities plus the resource-type labels shared by the cluster."""

    resource_names: tuple[str, ...]
    slaves: tuple[tuple[str, ResourceVector], ...]

    def __post_init__(self):
        object.__setattr__(self, "resource_names", tuple(self.resource_names))
        object.__setattr__(self, "slaves", tuple((s, c) for s, c in self.slaves))
        if not self.slaves:
            raise ValueError("cluster needs at least one slave")
        ids = [s for s, _ in self.slaves]
        if len(set(ids)) != len(ids):
            raise ValueError("slave ids must be unique")
        m = len(self.resource_names)
        for sid, cap in self.slaves:
            if len(cap) != m:
                raise ValueError(f"slave {sid}: capacity has wrong dimension")
            if any(q <= 0 for q in cap):
                raise ValueError(f"slave {sid}: capacities must be positive")

    @property
    def num_resources(self) -> int:
        return len(self.resource_names)

    @property
    def slave_ids(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self.slaves)

    def capacity(self, slave_id: str) -> ResourceVector:
        for sid, cap in self.slaves:
            if sid == slave_id:
                return cap
        raise KeyError(slave_id)


@dataclass(frozen=True)
class WorkloadProfile:
    """Simulation stand-in for the start/resume command of a submission.

    total_work is in abstract work-units; per_container_rate in
    work-units per second per container.
    """

    total_work: Fraction
    per_container_rate: Fraction
    checkpoint_save_cost: Fraction = Fraction(0)
    resume_cost: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "total_work", as_frac(self.total_work))
        object.__setattr__(self, "per_container_rate", as_frac(self.per_container_rate))
        object.__setattr__(self, "checkpoint_save_cost", as_frac(self.checkpoint_save_cost))
        object.__setattr__(self, "resume_cost", as_frac(self.resume_cost))
        if self.total_work <= 0 or self.per_container_rate <= 0:
            raise ValueError("total_work and per_container_rate must be positive")
        if self.checkpoint_save_cost < 0 or self.resume_cost < 0:
            raise ValueError("checkpoint costs must be non-negative")


@dataclass(frozen=True)
class ApplicationSpec:
    """The submission 6-tuple, with the launch command replaced by a
    workload profile."""

    app_id: str
    executor: str
    demand: ResourceVector
    weight: int
    n_max: int
    n_min: int
    profile: WorkloadProfile

    def __post_init__(self):
        if self.weight < 1:
            raise ValueError(f"{self.app_id}: weight must be a positive integer")
        if self.n_min < 1 or self.n_min > self.n_max:
            raise ValueError(f"{self.app_id}: need 1 <= n_min <= n_max")
        if all(q == 0 for q in self.demand):
            raise ValueError(f"{self.app_id}: demand must have a positive component")


class AllocationMatrix:
    """Container counts per (app, slave). Absent entries mean zero."""

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[tuple[str, str], int] | None = None):
        cleaned: dict[tuple[str, str], int] = {}
        for key, count in (entries or {}).items():
            if not isinstance(count, int) or count < 0:
                raise ValueError(f"container count for {key} must be a non-negative integer")
            if count > 0:
                cleaned[key] = count
        object.__setattr__(self, "_entries", cleaned)

    def __setattr__(self, *a):
        raise AttributeError("AllocationMatrix is immutable")

    def get(self, app_id: str, slave_id: str) -> int:
        return self._entries.get((app_id, slave_id), 0)

    def items(self):
        return self._entries.items()

    @property
    def app_ids(self) -> set[str]:
        return {a for a, _ in self._entries}

    def row(self, app_id: str) -> dict[str, int]:
        return {s: n for (a, s), n in self._entries.items() if a == app_id}

    def restricted_to(self, app_ids: Iterable[str]) -> "AllocationMatrix":
        keep = set(app_ids)
        return AllocationMatrix({k: n for k, n in self._entries.items() if k[0] in keep})

    def with_row(self, app_id: str, row: Mapping[str, int]) -> "AllocationMatrix":
        entries = {k: n for k, n in self._entries.items() if k[0] != app_id}
        for sid, n in row.items():
            if n:
                entries[(app_id, sid)] = n
        return AllocationMatrix(entries)

    def __reduce__(self):
        return (AllocationMatrix, (dict(self._entries),))

    def __eq__(self, other):
        return isinstance(other, AllocationMatrix) and self._entries == other._entries

    def __hash__(self):
        return hash(frozenset(self._entries.items()))

    def __repr__(self):
        body = ", ".join(f"({a},{s}):{n}" for (a, s), n in sorted(self._entries.items()))
        return f"AllocationMatrix({{{body}}})"


def total_capacity(cluster: ClusterSpec) -> ResourceVector:
    """Component-wise sum of all slave capacities."""
    total = [Fraction(0)] * cluster.num_resources
    for _, cap in cluster.slaves:
        for k, q in enumerate(cap):
            total[k] += q
    return ResourceVector(total)


def containers_of(alloc: AllocationMatrix, app_id: str) -> int:
    """Total container count an application holds across all slaves."""
    return sum(n for (a, _), n in alloc.items() if a == app_id)


def slave_usage(alloc: AllocationMatrix, apps: Mapping[str, ApplicationSpec],
                cluster: ClusterSpec) -> dict[str, list[Fraction]]:
    """Per-slave, per-resource usage of an allocation."""
    usage = {sid: [Fraction(0)] * cluster.num_resources for sid in cluster.slave_ids}
    for (app_id, slave_id), n in alloc.items():
        demand = apps[app_id].demand
        for k, d in enumerate(demand):
            usage[slave_id][k] += n * d
    return usage


def check_capacity(alloc: AllocationMatrix, apps: Mapping[str, ApplicationSpec],
                   cluster: ClusterSpec) -> bool:
    """Exact capacity-feasibility check on every (slave, resource) pair."""
    usage = slave_usage(alloc, apps, cluster)
    for sid, cap in cluster.slaves:
        for k, q in enumerate(cap):
            if usage[sid][k] > q:
                return False
    return True
