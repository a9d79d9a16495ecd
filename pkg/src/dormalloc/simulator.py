"""Discrete-event engine: submissions arrive, the optimizer reallocates,
adjustments run, applications progress and complete, metrics are sampled.

Time and work are tracked as exact rationals, so completion instants and
work conservation hold without float drift and runs are fully
deterministic for fixed inputs.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from . import optimizer
from .adjustment import DEFAULT_CHURN_LATENCY, plan_adjustment
from .drf import actual_dominant_share, theoretical_shares
from .metrics import MetricsSample, utilization
from .model import (AllocationMatrix, ApplicationSpec, ClusterSpec, as_frac,
                    containers_of)

log = logging.getLogger("dormalloc.simulator")

# event kind priorities inside one timestamp
_PRIO = {"complete": 0, "adjust_done": 1, "submit": 2, "reallocate": 3, "sample": 4}


@dataclass(frozen=True)
class DormPolicy:
    theta1: Fraction
    theta2: Fraction
    solver_budget: float = 1.0
    weighted: bool = True
    fairness_budget_mode: str = "ceil"
    name: str = "dorm"


@dataclass(frozen=True)
class StaticPolicy:
    containers_by_type: Mapping[str, int]
    name: str = "static"


@dataclass(frozen=True)
class ScriptedPolicy:
    """Apply pre-computed allocations at fixed times (testing/calibration)."""
    allocations: tuple[tuple[Fraction, AllocationMatrix], ...]
    name: str = "scripted"


@dataclass
class AppRecord:
    app_id: str
    type_name: str
    submit: Fraction
    start: Fraction | None = None
    complete: Fraction | None = None
    downtime_total: Fraction = Fraction(0)
    containers_time_integral: Fraction = Fraction(0)
    skipped: bool = False


@dataclass
class ReallocRecord:
    time: Fraction
    accepted: bool
    status: str
    fairness_loss: Fraction | None
    fairness_budget: Fraction | None
    overhead: int
    adjust_budget: int | None


@dataclass
class SimTrace:
    policy: str
    seed: int
    horizon: Fraction
    samples: list[MetricsSample] = field(default_factory=list)
    apps: list[AppRecord] = field(default_factory=list)
    reallocs: list[ReallocRecord] = field(default_factory=list)
    alloc_events: list[tuple[Fraction, AllocationMatrix]] = field(default_factory=list)

    def summary(self) -> dict:
        done = [a for a in self.apps if a.complete is not None]
        n = max(len(self.samples), 1)
        mean_util = sum((s.utilization for s in self.samples), Fraction(0)) / n
        mean_loss = sum((s.fairness_loss for s in self.samples), Fraction(0)) / n
        return {
            "policy": self.policy,
            "seed": self.seed,
            "mean_utilization": float(mean_util),
            "mean_fairness_loss": float(mean_loss),
            "max_fairness_loss": float(max((s.fairness_loss for s in self.samples),
                                           default=Fraction(0))),
            "total_affected_apps": sum(r.overhead for r in self.reallocs),
            "apps_submitted": len(self.apps),
            "apps_completed": len(done),
        }


class _AppState:
    __slots__ = ("spec", "record", "containers", "paused_until", "remaining",
                 "accounted_at", "version", "done")

    def __init__(self, spec: ApplicationSpec, submit: Fraction):
        self.spec = spec
        self.record = AppRecord(app_id=spec.app_id, type_name=spec.executor,
                                submit=submit)
        self.containers = 0
        self.paused_until: Fraction | None = None
        self.remaining = spec.profile.total_work
        self.accounted_at = submit
        self.version = 0
        self.done = False

    def rate_at(self, t: Fraction) -> Fraction:
        if self.done or self.containers == 0:
            return Fraction(0)
        if self.paused_until is not None and t < self.paused_until:
            return Fraction(0)
        return self.spec.profile.per_container_rate * self.containers

    def advance(self, t: Fraction):
        """Account work and container-time up to t."""
        if t <= self.accounted_at:
            return
        t0, t1 = self.accounted_at, t
        if not self.done:
            active_from = t0
            if self.paused_until is not None:
                active_from = max(t0, min(self.paused_until, t1))
            if self.containers > 0 and active_from < t1:
                work = self.spec.profile.per_container_rate * self.containers * (t1 - active_from)
                self.remaining = max(Fraction(0), self.remaining - work)
            self.record.containers_time_integral += self.containers * (t1 - t0)
        self.accounted_at = t
        if self.paused_until is not None and t >= self.paused_until:
            self.paused_until = None


def progress_rate(app: ApplicationSpec, alloc: AllocationMatrix) -> Fraction:
    """Work-units per second: linear in containers; zero with none."""
    return app.profile.per_container_rate * containers_of(alloc, app.app_id)


def _fits_empty(app: ApplicationSpec, cluster: ClusterSpec) -> bool:
    """Can n_min containers be first-fit packed on an empty cluster?"""
    free = {sid: list(cluster.capacity(sid).quantities) for sid in cluster.slave_ids}
    placed = 0
    for sid in cluster.slave_ids:
        while placed < app.n_min and all(
                free[sid][k] >= d for k, d in enumerate(app.demand)):
            for k, d in enumerate(app.demand):
                free[sid][k] -= d
            placed += 1
    return placed >= app.n_min


def run(workload, cluster: ClusterSpec, policy, seed: int = 0,
        horizon=86400, cadence=60,
        churn_latency=DEFAULT_CHURN_LATENCY) -> SimTrace:
    """Replay a workload (list of (time, ApplicationSpec), sorted by time)
    under the given policy and return the full trace."""
    horizon = as_frac(horizon)
    cadence = as_frac(cadence)
    if cadence <= 0:
        raise ValueError("cadence must be positive")
    workload = [(as_frac(t), a) for t, a in workload]
    for (t1, _), (t2, _) in zip(workload, workload[1:]):
        if t2 < t1:
            raise ValueError("workload must be sorted by submission time")
    if workload and workload[-1][0] >= horizon:
        raise ValueError("horizon must exceed the last submission time")

    trace = SimTrace(policy=policy.name, seed=seed, horizon=horizon)
    states: dict[str, _AppState] = {}
    order: list[str] = []  # submission order of live app ids
    alloc = AllocationMatrix()
    static_queue: list[str] = []
    shat_cache: dict[frozenset, dict[str, Fraction]] = {}
    weighted = getattr(policy, "weighted", True)

    heap: list = []
    seq = 0

    def push(t: Fraction, kind: str, payload=None):
        nonlocal seq
        heapq.heappush(heap, (t, _PRIO[kind], seq, kind, payload))
        seq += 1

    for t, app in workload:
        push(t, "submit", app)
    k = 0
    while k * cadence <= horizon:
        push(k * cadence, "sample", None)
        k += 1
    if isinstance(policy, ScriptedPolicy):
        for t, a in policy.allocations:
            push(as_frac(t), "reallocate", a)

    def live_specs() -> list[ApplicationSpec]:
        return [states[i].spec for i in order if not states[i].done]

    def shat_for(specs) -> dict[str, Fraction]:
        key = frozenset(s.app_id for s in specs)
        if key not in shat_cache:
            shat_cache[key] = theoretical_shares(list(specs), cluster,
                                                 weighted=weighted)
        return shat_cache[key]

    def schedule_completion(st: _AppState, now: Fraction):
        st.version += 1
        if st.done or st.containers == 0 or st.remaining <= 0:
            return
        t_eff = now
        if st.paused_until is not None and st.paused_until > now:
            t_eff = st.paused_until
        rate = st.spec.profile.per_container_rate * st.containers
        finish = t_eff + st.remaining / rate
        push(finish, "complete", (st.spec.app_id, st.version))

    def take_sample(now: Fraction, overhead: int):
        specs = live_specs()
        by_id = {s.app_id: s for s in specs}
        # a completed app may still sit in the matrix until the
        # coincident reallocation runs; ignore it for sampling
        total, per_res = utilization(alloc.restricted_to(by_id), by_id, cluster)
        loss = Fraction(0)
        if specs:
            shat = shat_for(specs)
            for s in specs:
                loss += abs(actual_dominant_share(s, alloc, cluster) - shat[s.app_id])
        trace.samples.append(MetricsSample(
            time=now, utilization=total, fairness_loss=loss,
            adjustment_overhead=overhead, per_resource_util=tuple(per_res)))

    def apply_allocation(now: Fraction, new_alloc: AllocationMatrix,
                         rec: ReallocRecord):
        nonlocal alloc
        specs = live_specs()
        by_id = {s.app_id: s for s in specs}
        carryover = [i for i in order
                     if not states[i].done and containers_of(alloc, i) > 0]
        plan = plan_adjustment(alloc, new_alloc, by_id, carryover,
                               cluster.slave_ids, churn_latency, at_time=now)
        rec.overhead = len(plan)
        downtimes = {e.app_id: e.downtime for e in plan}
        for app_id in by_id:
            st = states[app_id]
            old_n = containers_of(alloc, app_id)
            new_n = containers_of(new_alloc, app_id)
            changed = any(alloc.get(app_id, s) != new_alloc.get(app_id, s)
                          for s in cluster.slave_ids)
            if not changed:
                continue
            st.advance(now)
            if app_id in downtimes:
                st.paused_until = now + downtimes[app_id]
                st.record.downtime_total += downtimes[app_id]
                push(st.paused_until, "adjust_done", app_id)
            elif old_n == 0 and new_n > 0:
                latency = st.spec.profile.resume_cost
                if st.record.start is None:
                    st.record.start = now
                if latency > 0:
                    st.paused_until = now + latency
                    st.record.downtime_total += latency
                    push(st.paused_until, "adjust_done", app_id)
            st.containers = new_n
            schedule_completion(st, now)
        alloc = new_alloc
        trace.alloc_events.append((now, new_alloc))
        trace.reallocs.append(rec)
        take_sample(now, rec.overhead)

    def dorm_reallocate(now: Fraction):
        specs = live_specs()
        if not specs:
            return
        shat = shat_for(specs)
        problem = optimizer.build_problem(
            specs, cluster, alloc, shat, policy.theta1, policy.theta2,
            fairness_budget_mode=policy.fairness_budget_mode)
        sol = optimizer.solve(problem, budget=policy.solver_budget)
        if sol.status in (optimizer.OPTIMAL, optimizer.FEASIBLE):
            rec = ReallocRecord(
                time=now, accepted=True, status=sol.status,
                fairness_loss=sum(sol.l.values(), Fraction(0)),
                fairness_budget=problem.fairness_budget,
                overhead=sum(sol.r.values()),
                adjust_budget=problem.adjust_budget)
            apply_allocation(now, sol.x, rec)
        else:
            log.debug("t=%s: no feasible reallocation (%s), keeping allocation",
                      now, sol.status)
            rec = ReallocRecord(time=now, accepted=False, status=sol.status,
                                fairness_loss=None,
                                fairness_budget=problem.fairness_budget,
                                overhead=0,
                                adjust_budget=problem.adjust_budget)
            live = {s.app_id for s in specs}
            apply_allocation(now, alloc.restricted_to(live), rec)

    def static_try_admit(now: Fraction):
        # FIFO-priority scan: earlier submissions get first pick of the
        # remaining capacity, later ones may still fit around a blocked app
        changed = False
        new_alloc = alloc
        for app_id in list(static_queue):
            st = states[app_id]
            count = policy.containers_by_type.get(st.spec.executor)
            if count is None:
                raise ValueError(f"no static container count for type "
                                 f"{st.spec.executor!r}")
            free = {sid: list(cluster.capacity(sid).quantities)
                    for sid in cluster.slave_ids}
            load = {sid: 0 for sid in cluster.slave_ids}
            for (a, sid), n in new_alloc.items():
                load[sid] += n
                for k, d in enumerate(states[a].spec.demand):
                    free[sid][k] -= n * d
            # Swarm-style spread placement: each container goes to the
            # fitting slave with the fewest containers (ties: lowest index)
            row: dict[str, int] = {}
            placed = 0
            slave_rank = {sid: i for i, sid in enumerate(cluster.slave_ids)}
            while placed < count:
                cands = [sid for sid in cluster.slave_ids
                         if all(free[sid][k] >= d
                                for k, d in enumerate(st.spec.demand))]
                if not cands:
                    break
                sid = min(cands, key=lambda s: (load[s], slave_rank[s]))
                for k, d in enumerate(st.spec.demand):
                    free[sid][k] -= d
                load[sid] += 1
                row[sid] = row.get(sid, 0) + 1
                placed += 1
            if placed < count:
                continue  # stays queued, retried on the next event
            static_queue.remove(app_id)
            new_alloc = new_alloc.with_row(app_id, row)
            changed = True
        if changed:
            rec = ReallocRecord(time=now, accepted=True, status="Static",
                                fairness_loss=None, fairness_budget=None,
                                overhead=0, adjust_budget=None)
            apply_allocation(now, new_alloc, rec)

    current = Fraction(0)
    while heap:
        t = heap[0][0]
        if t > horizon:
            break
        current = t
        realloc_needed = False
        scripted_alloc = None
        while heap and heap[0][0] == t:
            _, _, _, kind, payload = heapq.heappop(heap)
            if kind == "submit":
                app: ApplicationSpec = payload
                st = _AppState(app, t)
                states[app.app_id] = st
                trace.apps.append(st.record)
                if not _fits_empty(app, cluster):
                    st.done = True
                    st.record.skipped = True
                    log.warning("app %s cannot fit an empty cluster at n_min; "
                                "skipped", app.app_id)
                    continue
                order.append(app.app_id)
                if isinstance(policy, StaticPolicy):
                    static_queue.append(app.app_id)
                realloc_needed = True
            elif kind == "complete":
                app_id, version = payload
                st = states[app_id]
                if st.done or version != st.version:
                    continue
                st.advance(t)
                if st.remaining > 0:
                    continue  # stale
                st.done = True
                st.record.complete = t
                st.containers = 0
                realloc_needed = True
            elif kind == "adjust_done":
                st = states[payload]
                if not st.done:
                    st.advance(t)
                    schedule_completion(st, t)
            elif kind == "reallocate":
                scripted_alloc = payload
            elif kind == "sample":
                take_sample(t, 0)

        if realloc_needed or scripted_alloc is not None:
            live = {i for i in order if not states[i].done}
            if isinstance(policy, DormPolicy):
                # completed apps leave the matrix first
                if alloc.app_ids - live:
                    alloc = alloc.restricted_to(live)
                dorm_reallocate(t)
            elif isinstance(policy, StaticPolicy):
                if alloc.app_ids - live:
                    alloc = alloc.restricted_to(live)
                static_try_admit(t)
            elif isinstance(policy, ScriptedPolicy):
                if alloc.app_ids - live:
                    alloc = alloc.restricted_to(live)
                if scripted_alloc is not None:
                    rec = ReallocRecord(time=t, accepted=True, status="Scripted",
                                        fairness_loss=None, fairness_budget=None,
                                        overhead=0, adjust_budget=None)
                    apply_allocation(t, scripted_alloc.restricted_to(live), rec)
            else:
                raise TypeError(f"unknown policy {policy!r}")

    for st in states.values():
        st.advance(horizon)
    return trace
