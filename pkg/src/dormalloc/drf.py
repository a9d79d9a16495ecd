"""Dominant-resource-fairness shares.

Actual dominant shares are read off an allocation; theoretical shares come
from a weighted progressive-filling water-fill at continuous granularity
against the aggregate capacity vector. The water-fill is solved in closed
form per freezing event, so results are exact rationals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .model import (AllocationMatrix, ApplicationSpec, ClusterSpec,
                    ResourceVector, containers_of, total_capacity)


@dataclass(frozen=True)
class ShareRecord:
    app_id: str
    dominant_resource_index: int
    actual_share: Fraction
    theoretical_share: Fraction


def dominant_index(app: ApplicationSpec, totals: ResourceVector) -> int:
    """Index of the resource where the app's per-container demand consumes
    the largest fraction of aggregate capacity. Ties go to the lowest index."""
    best_k, best = 0, Fraction(-1)
    for k, d in enumerate(app.demand):
        share = d / totals[k]
        if share > best:
            best_k, best = k, share
    if best <= 0:
        raise ValueError(f"{app.app_id}: demand is all-zero, no dominant resource")
    return best_k


def share_per_container(app: ApplicationSpec, totals: ResourceVector) -> Fraction:
    """Dominant share contributed by one container of the app."""
    k = dominant_index(app, totals)
    return app.demand[k] / totals[k]


def actual_dominant_share(app: ApplicationSpec, alloc: AllocationMatrix,
                          cluster: ClusterSpec) -> Fraction:
    """max over resources of (demand * containers) / aggregate capacity."""
    totals = total_capacity(cluster)
    n = containers_of(alloc, app.app_id)
    if all(d == 0 for d in app.demand):
        raise ValueError(f"{app.app_id}: demand is all-zero, no dominant resource")
    return max(d * n / totals[k] for k, d in enumerate(app.demand))


def theoretical_shares(apps: list[ApplicationSpec], cluster: ClusterSpec,
                       weighted: bool = True) -> dict[str, Fraction]:
    """Weighted progressive-filling water-fill over aggregate capacity.

    Every unfinished app grows its (continuous) container count so dominant
    shares stay proportional to weights. An app freezes when it hits n_max
    or when some aggregate resource it demands is exhausted. Returns each
    app's dominant share at its freeze point.
    """
    if not apps:
        raise ValueError("need at least one application")
    totals = total_capacity(cluster)
    m = len(totals)

    # Per unit of fill level lam, app i holds n_i = lam * w_i / ds_i
    # containers, where ds_i is its per-container dominant share.
    ds = {a.app_id: share_per_container(a, totals) for a in apps}
    w = {a.app_id: Fraction(a.weight if weighted else 1) for a in apps}

    lam = Fraction(0)
    frozen_usage = [Fraction(0)] * m
    frozen_lam: dict[str, Fraction] = {}
    unfrozen = list(apps)
    saturated: set[int] = set()

    while unfrozen:
        rate = [Fraction(0)] * m
        for a in unfrozen:
            factor = w[a.app_id] / ds[a.app_id]
            for k, d in enumerate(a.demand):
                rate[k] += factor * d

        events: list[Fraction] = []
        cap_lams = {a.app_id: a.n_max * ds[a.app_id] / w[a.app_id] for a in unfrozen}
        events.extend(cap_lams.values())
        res_lams: dict[int, Fraction] = {}
        for k in range(m):
            if rate[k] > 0 and k not in saturated:
                res_lams[k] = (totals[k] - frozen_usage[k]) / rate[k]
        events.extend(res_lams.values())

        lam_star = min(events)
        assert lam_star >= lam

        newly_saturated = {k for k, v in res_lams.items() if v == lam_star}
        saturated |= newly_saturated
        to_freeze = []
        for a in unfrozen:
            if cap_lams[a.app_id] == lam_star:
                to_freeze.append(a)
            elif any(a.demand[k] > 0 for k in newly_saturated):
                to_freeze.append(a)
        lam = lam_star
        for a in to_freeze:
            frozen_lam[a.app_id] = lam
            n = lam * w[a.app_id] / ds[a.app_id]
            for k, d in enumerate(a.demand):
                frozen_usage[k] += n * d
            unfrozen.remove(a)

    return {a.app_id: frozen_lam[a.app_id] * w[a.app_id] for a in apps}


def share_report(apps: list[ApplicationSpec], alloc: AllocationMatrix,
                 cluster: ClusterSpec, weighted: bool = True) -> list[ShareRecord]:
    totals = total_capacity(cluster)
    shat = theoretical_shares(apps, cluster, weighted=weighted)
    return [
        ShareRecord(
            app_id=a.app_id,
            dominant_resource_index=dominant_index(a, totals),
            actual_share=actual_dominant_share(a, alloc, cluster),
            theoretical_share=shat[a.app_id],
        )
        for a in apps
    ]
