"""Checkpoint-based resource adjustment planning.

An affected application is saved, killed, re-shaped and resumed; it pays
save + per-container churn + resume seconds of downtime. Destroys are
ordered before creates on each slave so transient capacity is never
exceeded.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .metrics import adjustment_flags
from .model import AllocationMatrix, ApplicationSpec, as_frac

DEFAULT_CHURN_LATENCY = Fraction(5, 2)  # seconds per container created/destroyed


@dataclass(frozen=True)
class AdjustmentEntry:
    app_id: str
    saves_at: Fraction
    downtime: Fraction
    containers_destroyed: tuple[tuple[str, int], ...]
    containers_created: tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class AdjustmentPlan:
    entries: tuple[AdjustmentEntry, ...]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def affected_apps(self) -> set[str]:
        return {e.app_id for e in self.entries}


def plan_adjustment(prev: AllocationMatrix, nxt: AllocationMatrix,
                    apps: Mapping[str, ApplicationSpec],
                    carryover_apps: Iterable[str],
                    slave_ids: Iterable[str],
                    churn_latency=DEFAULT_CHURN_LATENCY,
                    at_time=Fraction(0)) -> AdjustmentPlan:
    """Plan for every carryover app whose placement changed. Newly launched
    apps are not adjustment entries; they pay start latency instead."""
    slave_ids = tuple(slave_ids)
    churn = as_frac(churn_latency)
    at_time = as_frac(at_time)
    flags = adjustment_flags(prev, nxt, carryover_apps, slave_ids)
    entries = []
    for app_id, flag in flags.items():
        if not flag:
            continue
        destroyed = []
        created = []
        for sid in slave_ids:
            delta = nxt.get(app_id, sid) - prev.get(app_id, sid)
            if delta < 0:
                destroyed.append((sid, -delta))
            elif delta > 0:
                created.append((sid, delta))
        churn_count = sum(n for _, n in destroyed) + sum(n for _, n in created)
        profile = apps[app_id].profile
        downtime = (profile.checkpoint_save_cost + churn * churn_count
                    + profile.resume_cost)
        entries.append(AdjustmentEntry(
            app_id=app_id, saves_at=at_time, downtime=downtime,
            containers_destroyed=tuple(destroyed),
            containers_created=tuple(created)))
    return AdjustmentPlan(entries=tuple(entries))
