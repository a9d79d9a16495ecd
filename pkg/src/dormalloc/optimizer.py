"""Utilization-fairness MILP: problem construction and solvers.

The integer program maximizes total resource utilization subject to
capacity, per-app container bounds, a fairness-loss budget and an
adjustment-overhead budget. `solve` runs branch-and-bound over an LP
relaxation (plus a greedy primal heuristic so large instances still get
an incumbent within budget); `brute_force` is the exhaustive oracle for
small instances.
"""

from __future__ import annotations

import heapq
import math
import time as _time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import lp
from .drf import dominant_index, share_per_container
from .model import (AllocationMatrix, ApplicationSpec, ClusterSpec,
                    as_frac, containers_of, total_capacity)

OPTIMAL = "Optimal"
FEASIBLE = "FeasibleIncumbent"
INFEASIBLE = "Infeasible"
UNKNOWN = "Unknown"  # budget expired with no incumbent; infeasibility not proven

# Deterministic work budget: `budget` seconds are converted into tableau-cell
# updates at this nominal rate, so identical inputs give identical solver
# output on any machine.
WORK_RATE = 20_000_000

INT_TOL = 1e-6
PRUNE_TOL = 1e-9

BRUTE_FORCE_LIMIT = 10_000_000


@dataclass(frozen=True)
class MilpProblem:
    apps: tuple[ApplicationSpec, ...]
    cluster: ClusterSpec
    prev_alloc: AllocationMatrix
    shat: dict[str, Fraction]
    theta1: Fraction
    theta2: Fraction
    fairness_budget: Fraction
    adjust_budget: int
    carryover: tuple[str, ...]
    big_m: int
    fairness_budget_mode: str = "ceil"


@dataclass
class MilpSolution:
    status: str
    x: AllocationMatrix | None
    l: dict[str, Fraction]
    r: dict[str, int]
    objective: Fraction | None
    node_count: int = 0
    work_used: int = 0
    wall_time: float = 0.0


def build_problem(apps, cluster: ClusterSpec, prev_alloc: AllocationMatrix,
                  shat: dict[str, Fraction], theta1, theta2,
                  fairness_budget_mode: str = "ceil") -> MilpProblem:
    """Assemble the MILP instance for the current application set."""
    apps = tuple(apps)
    if not apps:
        raise ValueError("no applications")
    theta1 = as_frac(theta1)
    theta2 = as_frac(theta2)
    if not (0 <= theta1 <= 1) or not (0 <= theta2 <= 1):
        raise ValueError("theta values must lie in [0, 1]")
    for a in apps:
        if a.app_id not in shat:
            raise ValueError(f"missing theoretical share for {a.app_id}")

    carryover = tuple(a.app_id for a in apps
                      if containers_of(prev_alloc, a.app_id) > 0)
    m = cluster.num_resources
    if fairness_budget_mode == "ceil":
        fairness_budget = Fraction(math.ceil(theta1 * 2 * m))
    elif fairness_budget_mode == "continuous":
        fairness_budget = theta1 * 2 * m
    else:
        raise ValueError(f"unknown fairness_budget_mode {fairness_budget_mode!r}")
    adjust_budget = math.ceil(theta2 * len(carryover))
    big_m = max(a.n_max for a in apps) + 1
    return MilpProblem(apps=apps, cluster=cluster, prev_alloc=prev_alloc,
                       shat=dict(shat), theta1=theta1, theta2=theta2,
                       fairness_budget=fairness_budget,
                       adjust_budget=adjust_budget, carryover=carryover,
                       big_m=big_m, fairness_budget_mode=fairness_budget_mode)


def _per_container_util(problem: MilpProblem) -> dict[str, Fraction]:
    totals = total_capacity(problem.cluster)
    return {a.app_id: sum((d / totals[k] for k, d in enumerate(a.demand)),
                          Fraction(0))
            for a in problem.apps}


def objective_of(problem: MilpProblem, x: AllocationMatrix) -> Fraction:
    """Exact utilization objective of an integral allocation."""
    util = _per_container_util(problem)
    return sum((util[a.app_id] * containers_of(x, a.app_id)
                for a in problem.apps), Fraction(0))


def check_solution(problem: MilpProblem, x: AllocationMatrix):
    """Exact feasibility check from the defining equations (not the LP
    linearizations). Returns (ok, l, r, objective)."""
    apps = {a.app_id: a for a in problem.apps}
    cluster = problem.cluster
    totals = total_capacity(cluster)

    # capacity per (slave, resource)
    for sid, cap in cluster.slaves:
        for k in range(cluster.num_resources):
            used = sum(n * apps[a].demand[k]
                       for (a, s), n in x.items() if s == sid)
            if used > cap[k]:
                return False, {}, {}, None

    # container count bounds
    counts = {a.app_id: containers_of(x, a.app_id) for a in problem.apps}
    for a in problem.apps:
        if not (a.n_min <= counts[a.app_id] <= a.n_max):
            return False, {}, {}, None

    # fairness loss from the definition
    l: dict[str, Fraction] = {}
    for a in problem.apps:
        s = max(d * counts[a.app_id] / totals[k] for k, d in enumerate(a.demand))
        l[a.app_id] = abs(s - problem.shat[a.app_id])
    if sum(l.values(), Fraction(0)) > problem.fairness_budget:
        return False, {}, {}, None

    # adjustment flags from the definition
    r: dict[str, int] = {}
    for app_id in problem.carryover:
        changed = any(problem.prev_alloc.get(app_id, s) != x.get(app_id, s)
                      for s in cluster.slave_ids)
        r[app_id] = 1 if changed else 0
    if sum(r.values()) > problem.adjust_budget:
        return False, {}, {}, None

    return True, l, r, objective_of(problem, x)


# ---------------------------------------------------------------------------
# LP relaxation assembly


class _LpModel:
    """Float arrays of the P2 relaxation, plus variable bookkeeping."""

    def __init__(self, problem: MilpProblem):
        apps = problem.apps
        cluster = problem.cluster
        totals = total_capacity(cluster)
        slaves = cluster.slave_ids
        A_n, B_n, m = len(apps), len(slaves), cluster.num_resources
        carry = problem.carryover
        C_n = len(carry)
        nx = A_n * B_n
        self.problem = problem
        self.napps, self.nslaves, self.ncarry = A_n, B_n, C_n
        self.nvars = nx + A_n + C_n
        self.x_index = {(i, j): i * B_n + j for i in range(A_n) for j in range(B_n)}
        self.l_offset = nx
        self.r_offset = nx + A_n
        self.carry_pos = {app_id: ci for ci, app_id in enumerate(carry)}

        rows: list[np.ndarray] = []
        rhs: list[float] = []

        def add_row(coeffs: dict[int, float], bound: float):
            row = np.zeros(self.nvars)
            for v, co in coeffs.items():
                row[v] = co
            rows.append(row)
            rhs.append(bound)

        # capacity
        for j in range(B_n):
            cap = cluster.capacity(slaves[j])
            for k in range(m):
                add_row({self.x_index[(i, j)]: float(apps[i].demand[k])
                         for i in range(A_n) if apps[i].demand[k] != 0},
                        float(cap[k]))
        # container bounds
        for i in range(A_n):
            add_row({self.x_index[(i, j)]: 1.0 for j in range(B_n)},
                    float(apps[i].n_max))
            add_row({self.x_index[(i, j)]: -1.0 for j in range(B_n)},
                    -float(apps[i].n_min))
        # fairness-loss linearization: per-resource epigraph for l >= s - shat,
        # dominant resource only for l >= shat - s
        for i in range(A_n):
            a = apps[i]
            shat_i = float(problem.shat[a.app_id])
            for k in range(m):
                if a.demand[k] == 0:
                    continue
                co = float(a.demand[k] / totals[k])
                cd = {self.x_index[(i, j)]: co for j in range(B_n)}
                cd[self.l_offset + i] = -1.0
                add_row(cd, shat_i)
            K = dominant_index(a, totals)
            co = float(a.demand[K] / totals[K])
            cd = {self.x_index[(i, j)]: -co for j in range(B_n)}
            cd[self.l_offset + i] = -1.0
            add_row(cd, -shat_i)
        # adjustment big-M rows and r domain (carryover apps only)
        bigM = float(problem.big_m)
        for app_id, ci in self.carry_pos.items():
            i = next(idx for idx, a in enumerate(apps) if a.app_id == app_id)
            for j in range(B_n):
                prev = float(problem.prev_alloc.get(app_id, slaves[j]))
                add_row({self.x_index[(i, j)]: 1.0,
                         self.r_offset + ci: -bigM}, prev)
                add_row({self.x_index[(i, j)]: -1.0,
                         self.r_offset + ci: -bigM}, -prev)
            add_row({self.r_offset + ci: 1.0}, 1.0)
        # threshold budgets
        add_row({self.l_offset + i: 1.0 for i in range(A_n)},
                float(problem.fairness_budget))
        if C_n:
            add_row({self.r_offset + ci: 1.0 for ci in range(C_n)},
                    float(problem.adjust_budget))

        self.A = np.array(rows)
        self.b = np.array(rhs)
        util = _per_container_util(problem)
        self.c = np.zeros(self.nvars)
        for i in range(A_n):
            u = float(util[apps[i].app_id])
            for j in range(B_n):
                self.c[self.x_index[(i, j)]] = u

    def solve_relaxation(self, bounds: dict[int, tuple[int | None, int | None]],
                         max_pivots: int) -> lp.LpResult:
        extra_rows = []
        extra_rhs = []
        for v, (lo, hi) in sorted(bounds.items()):
            if hi is not None:
                row = np.zeros(self.nvars)
                row[v] = 1.0
                extra_rows.append(row)
                extra_rhs.append(float(hi))
            if lo is not None and lo > 0:
                row = np.zeros(self.nvars)
                row[v] = -1.0
                extra_rows.append(row)
                extra_rhs.append(-float(lo))
        if extra_rows:
            A = np.vstack([self.A] + [np.array(extra_rows)])
            b = np.concatenate([self.b, np.array(extra_rhs)])
        else:
            A, b = self.A, self.b
        return solve_lp_counted(self.c, A, b, max_pivots)

    def work_per_pivot(self, extra_rows: int = 0) -> int:
        rows = self.A.shape[0] + extra_rows
        cols = self.nvars + 2 * rows + 1
        return (rows + 1) * cols


def solve_lp_counted(c, A, b, max_pivots):
    return lp.solve_lp(c, A, b, max_pivots=max_pivots)


# ---------------------------------------------------------------------------
# greedy primal heuristic


# greedy growth tuning: how much of the fairness budget the heuristic may
# spend overshooting fair targets, how much of that may scatter across
# small-share apps, and whether growth keeps slots reserved for
# scarcer-resource apps before letting others fill them
GROW_FRAC = Fraction(7, 8)
DIFFUSE_FRAC = None  # None: no separate ration on spread-out overshoot
RESERVE_SCARCE = True


def _greedy_incumbent(problem: MilpProblem) -> AllocationMatrix | None:
    """Deterministic DRF-guided packing used as the initial incumbent.

    Keeps all but `adjust_budget` carryover placements frozen, repacks the
    rest toward their water-fill target counts, then grows container counts
    greedily while the exact fairness budget still holds. If the first
    choice of apps to adjust leaves some app unable to place n_min
    containers, retries once with an adjusted set picked to free up the
    slaves that app could run on.
    """
    apps = problem.apps
    cluster = problem.cluster
    totals = total_capacity(cluster)
    slaves = cluster.slave_ids
    by_id = {a.app_id: a for a in apps}

    ds = {a.app_id: share_per_container(a, totals) for a in apps}
    dom = {a.app_id: dominant_index(a, totals) for a in apps}
    target = {}
    for a in apps:
        t = int(problem.shat[a.app_id] / ds[a.app_id])  # floor
        target[a.app_id] = min(max(t, a.n_min), a.n_max)

    carry = set(problem.carryover)
    prev_counts = {a.app_id: containers_of(problem.prev_alloc, a.app_id)
                   for a in apps}

    def fit_flexibility(a: ApplicationSpec) -> int:
        return sum(1 for sid in slaves
                   if all(cluster.capacity(sid)[k] >= d
                          for k, d in enumerate(a.demand)))

    order = {a.app_id: i for i, a in enumerate(apps)}
    nmin_order = sorted(apps, key=lambda a: (fit_flexibility(a), order[a.app_id]))

    slave_index = {sid: i for i, sid in enumerate(slaves)}

    def slave_order(a: ApplicationSpec) -> tuple:
        # steer containers away from slaves rich in resources the app
        # does not use (e.g. keep zero-GPU containers off GPU slaves)
        zero_ks = [k for k, d in enumerate(a.demand) if d == 0]
        return tuple(sorted(
            slaves,
            key=lambda sid: (sum((cluster.capacity(sid)[k] / totals[k]
                                  for k in zero_ks), Fraction(0)),
                             slave_index[sid])))

    slave_orders = {a.app_id: slave_order(a) for a in apps}

    # slaves holding well over the average share of a resource an app does
    # not use stay off-limits for that app's over-target growth, so future
    # submissions needing that resource can still fit at n_min
    def specialized(a: ApplicationSpec, sid: str) -> bool:
        cap = cluster.capacity(sid)
        return any(d == 0 and cap[k] * len(slaves) > 2 * totals[k]
                   for k, d in enumerate(a.demand))

    special = {(a.app_id, sid): specialized(a, sid)
               for a in apps for sid in slaves}

    def attempt(adjusted: set):
        """Returns (allocation or None, app blocked at n_min or None)."""
        frozen = carry - adjusted
        free = {sid: list(cluster.capacity(sid).quantities) for sid in slaves}
        entries: dict[tuple[str, str], int] = {}
        for app_id in frozen:
            for sid, n in problem.prev_alloc.row(app_id).items():
                entries[(app_id, sid)] = n
                for k, d in enumerate(by_id[app_id].demand):
                    free[sid][k] -= n * d
        if any(q < 0 for qs in free.values() for q in qs):
            return None, None  # prev allocation no longer fits

        counts: dict[str, int] = {}

        def crowds_out(app: ApplicationSpec, sid: str) -> bool:
            # placing here would consume the last slot an app dominated by
            # a different, scarcer resource could still grow into; frozen
            # apps count too, so room stays open for them to grow at a
            # later reallocation. Same-dominant apps compete freely.
            qs = free[sid]
            after = [q - d for q, d in zip(qs, app.demand)]
            for b in apps:
                if (ds[b.app_id] <= ds[app.app_id]
                        or dom[b.app_id] == dom[app.app_id]
                        or counts.get(b.app_id, 0) >= b.n_max):
                    continue
                if all(q >= d for q, d in zip(qs, b.demand)) and \
                        not all(q >= d for q, d in zip(after, b.demand)):
                    return True
            return False

        def place_one(app: ApplicationSpec, reserve: bool = False,
                      over: bool = False) -> str | None:
            for sid in slave_orders[app.app_id]:
                if all(free[sid][k] >= d for k, d in enumerate(app.demand)):
                    if over and special[(app.app_id, sid)]:
                        continue
                    if reserve and crowds_out(app, sid):
                        continue
                    for k, d in enumerate(app.demand):
                        free[sid][k] -= d
                    return sid
            return None

        counts = dict(prev_counts)
        # fill and grow scarce-resource apps first: a high per-container
        # share means the app's dominant resource runs out soonest
        movable = sorted((a for a in apps if a.app_id not in frozen),
                         key=lambda a: (-ds[a.app_id], order[a.app_id]))
        movable_set = {a.app_id for a in movable}
        # n_min for everyone first (least-flexible apps pick slaves first)
        # so one app's target can't starve another
        for a in nmin_order:
            if a.app_id not in movable_set:
                continue
            counts[a.app_id] = 0
            for _ in range(a.n_min):
                sid = place_one(a)
                if sid is None:
                    return None, a
                entries[(a.app_id, sid)] = entries.get((a.app_id, sid), 0) + 1
                counts[a.app_id] += 1
        def loss_of(counts_map) -> Fraction:
            total = Fraction(0)
            for a in apps:
                s = counts_map[a.app_id] * ds[a.app_id]
                total += abs(s - problem.shat[a.app_id])
            return total

        loss = loss_of(counts)
        # total loss may overshoot up to GROW_FRAC of the budget (the slack
        # absorbs share drift until the next repair pass), but overshoot
        # spread across many small-share apps is rationed much tighter:
        # spread-out drift cannot be repaired within the adjustment budget
        small = problem.fairness_budget / 4
        diffuse_cap = (None if DIFFUSE_FRAC is None
                       else problem.fairness_budget * DIFFUSE_FRAC)
        diffuse = Fraction(0)
        # growth keeps slots of scarcer-resource apps reserved so they
        # stay growable at later reallocations
        for reserve in ((True,) if RESERVE_SCARCE else (False,)):
            growable = set(movable_set)
            while growable:
                progressed = False
                for a in movable:
                    if a.app_id not in growable:
                        continue
                    if counts[a.app_id] >= a.n_max:
                        growable.discard(a.app_id)
                        continue
                    new_counts = dict(counts)
                    new_counts[a.app_id] += 1
                    new_loss = loss_of(new_counts)
                    over = new_counts[a.app_id] > target[a.app_id]
                    if over and diffuse_cap is not None and \
                            ds[a.app_id] < small and \
                            diffuse + ds[a.app_id] > diffuse_cap:
                        growable.discard(a.app_id)
                        continue
                    if not (new_loss <= problem.fairness_budget * GROW_FRAC
                            or new_loss < loss):
                        growable.discard(a.app_id)
                        continue
                    sid = place_one(a, reserve=reserve, over=over)
                    if sid is None:
                        growable.discard(a.app_id)
                        continue
                    entries[(a.app_id, sid)] = entries.get((a.app_id, sid), 0) + 1
                    counts = new_counts
                    loss = new_loss
                    if over and ds[a.app_id] < small:
                        diffuse += ds[a.app_id]
                    progressed = True
                if not progressed:
                    break

        # bonus pass: spend the remaining budget on large-share apps only;
        # their overshoot stays concentrated in few containers, so the next
        # repair pass can still undo it within the adjustment budget
        chunky = problem.fairness_budget / 8
        growable = {i for i in movable_set if ds[i] >= chunky}
        while growable:
            progressed = False
            for a in movable:
                if a.app_id not in growable:
                    continue
                if counts[a.app_id] >= a.n_max:
                    growable.discard(a.app_id)
                    continue
                new_counts = dict(counts)
                new_counts[a.app_id] += 1
                new_loss = loss_of(new_counts)
                if new_loss > problem.fairness_budget and new_loss >= loss:
                    growable.discard(a.app_id)
                    continue
                sid = place_one(a, reserve=RESERVE_SCARCE,
                                over=new_counts[a.app_id] > target[a.app_id])
                if sid is None:
                    growable.discard(a.app_id)
                    continue
                entries[(a.app_id, sid)] = entries.get((a.app_id, sid), 0) + 1
                counts = new_counts
                loss = new_loss
                progressed = True
            if not progressed:
                break

        x = AllocationMatrix(entries)
        ok, l, r, _ = check_solution(problem, x)
        return (x if ok else None), None

    # free capacity left by the previous allocation, for growth potential
    slack = {sid: list(cluster.capacity(sid).quantities) for sid in slaves}
    idle = list(totals.quantities)
    for (app_id, sid), n in problem.prev_alloc.items():
        if app_id in by_id:
            for k, d in enumerate(by_id[app_id].demand):
                slack[sid][k] -= n * d
                idle[k] -= n * d

    def slack_room(a: ApplicationSpec) -> int:
        room = 0
        cap = a.n_max - prev_counts[a.app_id]
        for sid in slave_orders[a.app_id]:
            if room >= cap:
                break
            qs = slack[sid]
            if all(q >= 0 for q in qs):
                fit = min((qs[k] // d for k, d in enumerate(a.demand) if d > 0))
                room += int(fit)
        return min(room, cap)

    def potential(a: ApplicationSpec) -> int:
        # containers' worth of the app's dominant resource sitting idle
        # cluster-wide; non-dominant room can be freed by adjusting a donor
        k = dominant_index(a, totals)
        if a.demand[k] <= 0:
            return 0
        return max(0, min(a.n_max - prev_counts[a.app_id],
                          int(idle[k] // a.demand[k])))

    # pick apps to adjust, repair-first: unfreeze the carryover apps
    # whose share deviation can actually be reduced by re-counting them,
    # until the reducible drift left frozen fits comfortably inside the
    # fairness budget; leftover slots grow apps into idle capacity (with
    # a donor freeing room when needed)
    dev = {i: abs(prev_counts[i] * ds[i] - problem.shat[i]) for i in carry}

    def min_dev(i: str) -> Fraction:
        # best deviation the app could reach at any legal container count
        a = by_id[i]
        best = None
        for n in (target[i], target[i] + 1):
            n = min(max(n, a.n_min), a.n_max)
            d = abs(n * ds[i] - problem.shat[i])
            if best is None or d < best:
                best = d
        return best

    reducible = {i: dev[i] - min_dev(i) for i in carry}
    frozen_red = sum(reducible.values(), Fraction(0))
    # even a perfect repacking is stuck with the granularity floor, so
    # only the budget above that floor is real working room
    floor_dev = sum((min_dev(a.app_id) for a in apps), Fraction(0))
    headroom = max(Fraction(0), problem.fairness_budget - floor_dev) / 2
    repair_rank = [i for r, i in sorted(((reducible[i], i) for i in carry),
                                        key=lambda t: (-t[0], t[1])) if r > 0]
    picks: list[str] = []
    slots = problem.adjust_budget
    for i in repair_rank:
        if slots == 0 or frozen_red <= headroom:
            break
        picks.append(i)
        frozen_red -= reducible[i]
        slots -= 1
    growers = sorted(((potential(by_id[i]) * ds[i], i)
                      for i in carry if i not in picks),
                     key=lambda t: (-t[0], t[1]))
    if slots >= 2 and growers and growers[0][0] > 0:
        g = by_id[growers[0][1]]
        if slack_room(g) < potential(g):
            # pair the grower with the donor squatting on its host slaves
            host = [sid for sid in slaves
                    if all(cluster.capacity(sid)[k] >= d
                           for k, d in enumerate(g.demand))]
            donors = sorted(
                ((sum(problem.prev_alloc.get(i, sid) for sid in host), i)
                 for i in carry if i != g.app_id and i not in picks),
                key=lambda t: (-t[0], t[1]))
            if donors and donors[0][0] > 0:
                picks += [g.app_id, donors[0][1]]
                slots -= 2

    def score(i: str) -> Fraction:
        return max(abs(target[i] - prev_counts[i]),
                   potential(by_id[i])) * ds[i]
    scored = sorted(((score(i), i) for i in carry if i not in picks),
                    key=lambda t: (-t[0], t[1]))
    def donor_retry(x, adjusted):
        """After a successful pack: if a scarce-resource app lost containers
        relative to the previous allocation while its dominant resource sits
        idle, retry with a squatter evicted from one slave it fits on.
        Returns the alternative adjusted set, or None."""
        idle_x = list(total_capacity(cluster).quantities)
        for (i, sid), n in x.items():
            for k, d in enumerate(by_id[i].demand):
                idle_x[k] -= n * d
        losers = sorted(
            ((ds[a.app_id], a.app_id) for a in apps
             if containers_of(x, a.app_id) < min(prev_counts[a.app_id], a.n_max)
             and 0 < a.demand[dominant_index(a, totals)]
             <= idle_x[dominant_index(a, totals)]),
            key=lambda t: (-t[0], t[1]))
        if not losers:
            return None
        loser = by_id[losers[0][1]]
        dom = dominant_index(loser, totals)
        frozen = carry - adjusted
        free = {sid: list(cluster.capacity(sid).quantities) for sid in slaves}
        for (i, sid), n in x.items():
            for k, d in enumerate(by_id[i].demand):
                free[sid][k] -= n * d
        best = None  # (donor count, slave index, donors)
        for idx, sid in enumerate(slaves):
            # only slaves where the scarce resource itself is already free
            if (any(cluster.capacity(sid)[k] < d
                    for k, d in enumerate(loser.demand))
                    or free[sid][dom] < loser.demand[dom]):
                continue
            have = list(free[sid])
            donors: list[str] = []
            occupants = sorted(
                ((x.get(i, sid), i) for i in frozen if x.get(i, sid) > 0),
                key=lambda t: (-fit_flexibility(by_id[t[1]]), -t[0], t[1]))
            for n, i in occupants:
                if all(h >= d for h, d in zip(have, loser.demand)):
                    break
                donors.append(i)
                for k, d in enumerate(by_id[i].demand):
                    have[k] += n * d
            if donors and all(h >= d for h, d in zip(have, loser.demand)):
                cand = (len(donors), idx, donors)
                if best is None or cand[:2] < best[:2]:
                    best = cand
        if best is None:
            return None
        adjusted2 = set(adjusted) | set(best[2])
        # swap out the cheapest repairs if that overruns the budget
        removable = sorted(
            (i for i in adjusted if i not in best[2] and i != loser.app_id),
            key=lambda i: (reducible.get(i, Fraction(0)), i))
        for i in removable:
            if len(adjusted2) <= problem.adjust_budget:
                break
            adjusted2.discard(i)
        if len(adjusted2) > problem.adjust_budget or adjusted2 == adjusted:
            return None
        return adjusted2

    adjusted = set(picks) | {i for sc, i in scored[:slots] if sc > 0}
    # the drift ranking is only a guess at which unfreeze pays off most,
    # so also try the next few candidates in the last slot and keep the
    # packing with the best exact objective
    cands = [adjusted]
    if slots >= 1:
        base = set(picks) | {i for sc, i in scored[:slots - 1] if sc > 0}
    elif picks:
        # all slots went to repairs: free the cheapest one so a
        # high-potential grower can compete on exact objective
        base = set(picks) - {min(picks, key=lambda i: (reducible[i], i))}
    else:
        base = set(picks)
    alts = [i for sc, i in scored[:slots + 4] if sc > 0 and i not in adjusted]
    for i in alts[:4]:
        cands.append(base | {i})
    # pure-repair candidate: when the loss floor sits close to the budget,
    # only adjusting exactly the most-reducible apps can stay inside it
    pure = set(repair_rank[:problem.adjust_budget])
    if pure and pure not in cands:
        cands.append(pure)
    x = None
    best_obj = None
    best_adj = adjusted
    blocked = None
    for cand in cands:
        xc, b = attempt(cand)
        if xc is None:
            if blocked is None:
                blocked = b
            continue
        obj = check_solution(problem, xc)[3]
        if best_obj is None or obj > best_obj:
            x, best_obj, best_adj = xc, obj, cand
    if x is not None:
        alt = donor_retry(x, best_adj)
        if alt is not None:
            x2, _ = attempt(alt)
            if x2 is not None and check_solution(problem, x2)[3] > best_obj:
                return x2
        return x
    if blocked is None or problem.adjust_budget == 0:
        return x

    # the blocked app needs a whole n_min slot on one slave: find the
    # host slave that can be cleared with the fewest adjusted donors
    free0 = {sid: list(cluster.capacity(sid).quantities) for sid in slaves}
    for (app_id, sid), n in problem.prev_alloc.items():
        if app_id in by_id:
            for k, d in enumerate(by_id[app_id].demand):
                free0[sid][k] -= n * d
    best = None  # (donor count, slave index, donors)
    for idx, sid in enumerate(slaves):
        if any(cluster.capacity(sid)[k] < d
               for k, d in enumerate(blocked.demand)):
            continue
        have = list(free0[sid])
        donors: list[str] = []
        # flexible donors first: an evicted app that can only live on
        # these same slaves would immediately reclaim the slot
        occupants = sorted(
            ((problem.prev_alloc.get(i, sid), i) for i in carry
             if problem.prev_alloc.get(i, sid) > 0),
            key=lambda t: (-fit_flexibility(by_id[t[1]]), -t[0], t[1]))
        for n, i in occupants:
            if (len(donors) >= problem.adjust_budget
                    or all(h >= d for h, d in zip(have, blocked.demand))):
                break
            donors.append(i)
            for k, d in enumerate(by_id[i].demand):
                have[k] += n * d
        if all(h >= d for h, d in zip(have, blocked.demand)):
            cand = (len(donors), idx, donors)
            if best is None or cand[:2] < best[:2]:
                best = cand
    if best is None:
        return None
    adjusted2 = set(best[2])
    for i in repair_rank:
        if len(adjusted2) >= problem.adjust_budget:
            break
        adjusted2.add(i)
    if not adjusted2 or adjusted2 == adjusted:
        return None
    x, _ = attempt(adjusted2)
    return x


# ---------------------------------------------------------------------------
# branch and bound


def _loss_floor(problem: MilpProblem) -> Fraction:
    """Lower bound on the total fairness loss over all legal allocations.

    Per app the deviation is V-shaped in n, so its minimum sits at
    floor(shat/ds) or the next count, clamped to [n_min, n_max]. A
    carryover app keeps its previous deviation unless it spends one of
    the `adjust_budget` slots, so at most that many apps can drop from
    their current deviation to the per-app minimum (crediting the
    largest reductions first). The bound ignores capacity, so exceeding
    the fairness budget here is a proof of infeasibility.
    """
    totals = total_capacity(problem.cluster)
    carry = set(problem.carryover)
    floor_sum = Fraction(0)
    reductions: list[Fraction] = []
    for a in problem.apps:
        ds = share_per_container(a, totals)
        t = int(problem.shat[a.app_id] / ds)
        best = None
        for n in (t, t + 1):
            n = min(max(n, a.n_min), a.n_max)
            d = abs(n * ds - problem.shat[a.app_id])
            if best is None or d < best:
                best = d
        if a.app_id in carry:
            prev = containers_of(problem.prev_alloc, a.app_id)
            dev = abs(prev * ds - problem.shat[a.app_id])
            floor_sum += dev
            reductions.append(dev - best)
        else:
            floor_sum += best
    reductions.sort(reverse=True)
    for red in reductions[:problem.adjust_budget]:
        if red <= 0:
            break
        floor_sum -= red
    return floor_sum


def solve(problem: MilpProblem, budget: float = 10.0) -> MilpSolution:
    """Branch-and-bound over the LP relaxation.

    Branching picks the fractional container variable with the largest
    fractional part (ties: lowest (app, slave) index); nodes are explored
    best-bound first with FIFO tie-breaks. The search budget is a
    deterministic work allowance derived from `budget` seconds, so results
    are reproducible across machines.
    """
    t0 = _time.perf_counter()
    work_budget = int(budget * WORK_RATE)
    work_used = 0
    node_count = 0

    if _loss_floor(problem) > problem.fairness_budget:
        # even ignoring capacity, no legal container counts can keep the
        # total deviation inside the fairness budget
        return MilpSolution(status=INFEASIBLE, x=None, l={}, r={},
                            objective=None, node_count=0, work_used=0,
                            wall_time=_time.perf_counter() - t0)

    best_x = _greedy_incumbent(problem)
    if best_x is not None:
        ok, best_l, best_r, best_obj = check_solution(problem, best_x)
        assert ok
    else:
        best_l, best_r, best_obj = {}, {}, None

    def result(status):
        return MilpSolution(status=status, x=best_x,
                            l=best_l, r=best_r, objective=best_obj,
                            node_count=node_count, work_used=work_used,
                            wall_time=_time.perf_counter() - t0)

    model = _LpModel(problem)
    wpp = model.work_per_pivot()
    # root must at least be able to run a few passes over the tableau
    if wpp * 2 * (model.A.shape[0] + 2) > work_budget:
        return result(FEASIBLE if best_x is not None else UNKNOWN)

    apps = problem.apps
    slaves = problem.cluster.slave_ids
    nx = len(apps) * len(slaves)

    def run_lp(bounds):
        nonlocal work_used
        extra = sum((1 if hi is not None else 0) + (1 if lo not in (None, 0) else 0)
                    for lo, hi in bounds.values())
        per_pivot = model.work_per_pivot(extra)
        max_pivots = (work_budget - work_used) // per_pivot
        if max_pivots < 1:
            return None  # budget exhausted
        res = model.solve_relaxation(bounds, max_pivots)
        work_used += res.pivots * per_pivot
        return res

    heap: list = []
    seq = 0

    def push_node(bounds):
        nonlocal seq, node_count
        res = run_lp(bounds)
        node_count += 1
        if res is None or res.status == lp.PIVOT_LIMIT:
            return "budget"
        if res.status == lp.INFEASIBLE:
            return "infeasible"
        if res.status != lp.OPTIMAL:
            raise RuntimeError(f"unexpected LP status {res.status}")
        heapq.heappush(heap, (-res.objective, seq, bounds, res.x))
        seq += 1
        return "pushed"

    root = push_node({})
    if root == "infeasible":
        # float relaxation proved empty; trust an exact incumbent if we have one
        return result(FEASIBLE if best_x is not None else INFEASIBLE)
    if root == "budget":
        return result(FEASIBLE if best_x is not None else UNKNOWN)

    while heap:
        neg_bound, _, bounds, xlp = heapq.heappop(heap)
        bound = -neg_bound
        if best_obj is not None and bound <= float(best_obj) + PRUNE_TOL:
            # best-bound order: every remaining node is dominated too
            heap.clear()
            break

        # branch variable: container var with largest fractional part
        branch_v, branch_val, best_frac = -1, 0.0, INT_TOL
        for v in range(nx):
            frac = xlp[v] - math.floor(xlp[v])
            if min(frac, 1.0 - frac) <= INT_TOL:
                continue
            if frac > best_frac:
                branch_v, branch_val, best_frac = v, xlp[v], frac

        if branch_v < 0:
            # container counts integral: try the exact candidate
            entries = {}
            for i, a in enumerate(apps):
                for j, sid in enumerate(slaves):
                    n = int(round(xlp[model.x_index[(i, j)]]))
                    if n:
                        entries[(a.app_id, sid)] = n
            cand = AllocationMatrix(entries)
            ok, l_ex, r_ex, obj = check_solution(problem, cand)
            if ok:
                if best_obj is None or obj > best_obj:
                    best_x, best_l, best_r, best_obj = cand, l_ex, r_ex, obj
                continue
            # integral x but exact check failed: the relaxed r flags are
            # fractional; branch on the most fractional r variable
            branch_v, branch_val, best_frac = -1, 0.0, INT_TOL
            for ci in range(model.ncarry):
                v = model.r_offset + ci
                frac = xlp[v] - math.floor(xlp[v])
                f = min(frac, 1.0 - frac)
                if f > best_frac:
                    branch_v, branch_val, best_frac = v, xlp[v], f
            if branch_v < 0:
                continue  # nothing to branch on; fathom

        lo, hi = bounds.get(branch_v, (None, None))
        floor_val = math.floor(branch_val)
        down = dict(bounds)
        down[branch_v] = (lo, floor_val)
        up = dict(bounds)
        up[branch_v] = (floor_val + 1, hi)
        for child in (down, up):
            out = push_node(child)
            if out == "budget":
                return result(FEASIBLE if best_x is not None else UNKNOWN)

    if best_x is not None:
        return result(OPTIMAL)
    return result(INFEASIBLE)


# ---------------------------------------------------------------------------
# exhaustive oracle


def brute_force(problem: MilpProblem) -> MilpSolution:
    """Enumerate every integral allocation within the per-app bounds and
    return the best one satisfying the exact constraints. Ties go to the
    lexicographically smallest allocation vector."""
    t0 = _time.perf_counter()
    apps = problem.apps
    cluster = problem.cluster
    slaves = cluster.slave_ids
    m = cluster.num_resources

    caps = {(a.app_id, sid): min(
        [a.n_max] + [int(cluster.capacity(sid)[k] / a.demand[k])
                     for k in range(m) if a.demand[k] > 0])
        for a in apps for sid in slaves}
    space = 1
    for a in apps:
        app_space = 1
        for sid in slaves:
            app_space *= caps[(a.app_id, sid)] + 1
        space *= min(app_space, BRUTE_FORCE_LIMIT)
        if space > BRUTE_FORCE_LIMIT:
            raise ValueError("instance too large for brute force")

    util = _per_container_util(problem)
    free = {sid: list(cluster.capacity(sid).quantities) for sid in slaves}
    assign: dict[tuple[str, str], int] = {}
    best: list = [None, None]  # objective, AllocationMatrix

    def place_app(ai: int):
        if ai == len(apps):
            x = AllocationMatrix({k: n for k, n in assign.items() if n})
            ok, _, _, obj = check_solution(problem, x)
            if ok and (best[0] is None or obj > best[0]):
                best[0], best[1] = obj, x
            return
        a = apps[ai]

        def place_slave(si: int, placed: int):
            if si == len(slaves):
                if placed >= a.n_min:
                    place_app(ai + 1)
                return
            sid = slaves[si]
            hi = min(caps[(a.app_id, sid)], a.n_max - placed)
            for n in range(hi + 1):
                if n > 0:
                    bad = False
                    for k in range(m):
                        free[sid][k] -= a.demand[k]
                        if free[sid][k] < 0:
                            bad = True
                    if bad:
                        for k in range(m):
                            free[sid][k] += a.demand[k]
                        n -= 1
                        break
                assign[(a.app_id, sid)] = n
                place_slave(si + 1, placed + n)
            else:
                n = hi
            # undo the n containers we ended holding on this slave
            for k in range(m):
                free[sid][k] += n * a.demand[k]
            assign.pop((a.app_id, sid), None)

        place_slave(0, 0)

    place_app(0)
    wall = _time.perf_counter() - t0
    if best[0] is None:
        return MilpSolution(status=INFEASIBLE, x=None, l={}, r={},
                            objective=None, wall_time=wall)
    ok, l_ex, r_ex, obj = check_solution(problem, best[1])
    return MilpSolution(status=OPTIMAL, x=best[1], l=l_ex, r=r_ex,
                        objective=obj, wall_time=wall)


# ---------------------------------------------------------------------------
# allocation entry point


@dataclass
class AllocateResult:
    alloc: AllocationMatrix
    accepted: bool
    solution: MilpSolution
    shat: dict[str, Fraction]


def allocate(apps, cluster: ClusterSpec, prev_alloc: AllocationMatrix,
             theta1, theta2, budget: float = 10.0, weighted: bool = True,
             fairness_budget_mode: str = "ceil") -> AllocateResult:
    """Reallocation step: compute DRF targets, solve P2, fall back to the
    previous allocation (restricted to still-running apps) when no feasible
    solution is found within budget."""
    from .drf import theoretical_shares

    apps = list(apps)
    shat = theoretical_shares(apps, cluster, weighted=weighted)
    problem = build_problem(apps, cluster, prev_alloc, shat, theta1, theta2,
                            fairness_budget_mode=fairness_budget_mode)
    sol = solve(problem, budget=budget)
    if sol.status in (OPTIMAL, FEASIBLE):
        return AllocateResult(alloc=sol.x, accepted=True, solution=sol, shat=shat)
    current_ids = {a.app_id for a in apps}
    fallback = prev_alloc.restricted_to(current_ids)
    return AllocateResult(alloc=fallback, accepted=False, solution=sol, shat=shat)


def export_lp_text(problem: MilpProblem) -> str:
    """Human-readable LP-format dump of the P2 instance for cross-checking
    against external solvers."""
    model = _LpModel(problem)
    apps = problem.apps
    slaves = problem.cluster.slave_ids
    names = {}
    for (i, j), v in model.x_index.items():
        names[v] = f"x_{apps[i].app_id}_{slaves[j]}"
    for i, a in enumerate(apps):
        names[model.l_offset + i] = f"l_{a.app_id}"
    for app_id, ci in model.carry_pos.items():
        names[model.r_offset + ci] = f"r_{app_id}"

    def term(co, v):
        return f"{co:+.9g} {names[v]}"

    lines = ["Maximize", " obj: " + " ".join(
        term(model.c[v], v) for v in range(model.nvars) if model.c[v])]
    lines.append("Subject To")
    for ri in range(model.A.shape[0]):
        body = " ".join(term(model.A[ri, v], v)
                        for v in range(model.nvars) if model.A[ri, v])
        lines.append(f" c{ri}: {body} <= {model.b[ri]:.9g}")
    lines.append("General")
    lines.append(" " + " ".join(names[v] for v in range(len(apps) * len(slaves))))
    lines.append("Binary")
    lines.append(" " + " ".join(names[model.r_offset + ci]
                                for ci in range(model.ncarry)))
    lines.append("End")
    return "\n".join(lines) + "\n"
