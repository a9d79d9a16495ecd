import random
from fractions import Fraction

import pytest

from dormalloc import optimizer
from dormalloc.drf import theoretical_shares
from dormalloc.model import (AllocationMatrix, ApplicationSpec, ClusterSpec,
                             ResourceVector, WorkloadProfile, containers_of)
from dormalloc.optimizer import (FEASIBLE, INFEASIBLE, OPTIMAL, brute_force,
                                 build_problem, check_solution, export_lp_text,
                                 objective_of, solve)

PROF = WorkloadProfile(total_work=1000, per_container_rate=1)


def mk_app(app_id, demand, weight=1, n_max=4, n_min=1):
    return ApplicationSpec(app_id=app_id, executor="t",
                           demand=ResourceVector(demand), weight=weight,
                           n_max=n_max, n_min=n_min, profile=PROF)


def mk_cluster(*caps):
    names = tuple(f"r{k}" for k in range(len(caps[0])))
    return ClusterSpec(resource_names=names,
                       slaves=tuple((f"s{i}", ResourceVector(c))
                                    for i, c in enumerate(caps)))


def mk_problem(apps, cluster, prev=None, theta1="0.2", theta2="0.2", **kw):
    prev = prev if prev is not None else AllocationMatrix({})
    shat = theoretical_shares(apps, cluster)
    return build_problem(apps, cluster, prev, shat, theta1, theta2, **kw)


def test_build_problem_validation():
    cluster = mk_cluster([4, 16])
    with pytest.raises(ValueError, match="no applications"):
        build_problem([], cluster, AllocationMatrix({}), {}, "0.1", "0.1")
    apps = [mk_app("a", [1, 2])]
    shat = theoretical_shares(apps, cluster)
    with pytest.raises(ValueError, match="theta"):
        build_problem(apps, cluster, AllocationMatrix({}), shat, "1.5", "0.1")
    with pytest.raises(ValueError, match="missing theoretical share"):
        build_problem(apps, cluster, AllocationMatrix({}), {}, "0.1", "0.1")
    with pytest.raises(ValueError, match="fairness_budget_mode"):
        build_problem(apps, cluster, AllocationMatrix({}), shat, "0.1", "0.1",
                      fairness_budget_mode="round")


def test_budgets_are_ceiled():
    cluster = mk_cluster([8, 32], [8, 32])
    apps = [mk_app(f"a{i}", [1, 2]) for i in range(3)]
    prev = AllocationMatrix({("a0", "s0"): 1, ("a1", "s0"): 1, ("a2", "s1"): 1})
    p = mk_problem(apps, cluster, prev=prev, theta1="0.2", theta2="0.4")
    # ceil(0.2 * 2m) with m=2 -> 1; ceil(0.4 * 3 carryover) -> 2
    assert p.fairness_budget == 1
    assert p.adjust_budget == 2
    assert set(p.carryover) == {"a0", "a1", "a2"}
    p = mk_problem(apps, cluster, prev=prev, theta1="0.2", theta2="0.4",
                   fairness_budget_mode="continuous")
    assert p.fairness_budget == Fraction(4, 5)


def test_check_solution_exact():
    cluster = mk_cluster([4, 16])
    apps = [mk_app("a", [1, 4], n_max=4), mk_app("b", [1, 4], n_max=4)]
    p = mk_problem(apps, cluster, theta1="1", theta2="1")
    ok, l, r, obj = check_solution(
        p, AllocationMatrix({("a", "s0"): 2, ("b", "s0"): 2}))
    assert ok
    assert l == {"a": 0, "b": 0}  # shat = 1/2 each, actual = 8/16
    assert obj == objective_of(p, AllocationMatrix({("a", "s0"): 2,
                                                    ("b", "s0"): 2}))
    # over capacity on ram
    ok, *_ = check_solution(p, AllocationMatrix({("a", "s0"): 3,
                                                 ("b", "s0"): 2}))
    assert not ok
    # below n_min
    ok, *_ = check_solution(p, AllocationMatrix({("a", "s0"): 2}))
    assert not ok


def test_proven_infeasible_below_n_min():
    # one slave with 2 cpu cannot host 3 mandatory single-cpu containers
    cluster = mk_cluster([2])
    apps = [mk_app("a", [1], n_min=3, n_max=3)]
    sol = solve(mk_problem(apps, cluster, theta1="1", theta2="1"))
    assert sol.status == INFEASIBLE


def test_infeasible_by_fairness_budget():
    # carryover app stuck far from its target with no adjustment allowed
    cluster = mk_cluster([8, 8])
    apps = [mk_app("a", [1, 1], n_max=8)]
    prev = AllocationMatrix({("a", "s0"): 1})
    p = mk_problem(apps, cluster, prev=prev, theta1="0", theta2="0")
    # shat = 1 (saturates alone); frozen at 1/8 share -> loss 7/8 > budget 0
    sol = solve(p)
    assert sol.status == INFEASIBLE


def test_single_app_optimal_fills_to_n_max():
    cluster = mk_cluster([8, 64])
    apps = [mk_app("a", [1, 4], n_max=4)]
    sol = solve(mk_problem(apps, cluster, theta1="1", theta2="1"))
    assert sol.status in (OPTIMAL, FEASIBLE)
    assert containers_of(sol.x, "a") == 4
    ok, *_ = check_solution(mk_problem(apps, cluster, theta1="1", theta2="1"),
                            sol.x)
    assert ok


def test_solution_reports_l_and_r():
    cluster = mk_cluster([8, 32])
    apps = [mk_app("a", [1, 4], n_max=4), mk_app("b", [2, 4], n_max=4)]
    prev = AllocationMatrix({("a", "s0"): 1})
    p = mk_problem(apps, cluster, theta1="1", theta2="1", prev=prev)
    sol = solve(p)
    assert sol.status in (OPTIMAL, FEASIBLE)
    ok, l, r, obj = check_solution(p, sol.x)
    assert ok and sol.objective == obj
    assert set(l) == {"a", "b"} and set(r) == {"a"}


def random_problem(rng):
    m = 3
    n_slaves = rng.randint(1, 3)
    caps = [[rng.randint(2, 6), rng.randint(1, 4), rng.randint(8, 32)]
            for _ in range(n_slaves)]
    cluster = mk_cluster(*caps)
    apps = []
    for i in range(rng.randint(1, 4)):
        demand = [rng.randint(0, 2), rng.randint(0, 1), rng.randint(0, 8)]
        if all(d == 0 for d in demand):
            demand[0] = 1
        n_max = rng.randint(1, 4)
        apps.append(mk_app(f"a{i}", demand, weight=rng.choice([1, 2]),
                           n_max=n_max, n_min=rng.randint(0, 1) or 1))
    prev = {}
    for a in apps:
        if rng.random() < 0.5:
            sid = f"s{rng.randrange(n_slaves)}"
            prev[(a.app_id, sid)] = rng.randint(1, a.n_max)
    theta1 = rng.choice(["0.1", "0.2", "0.5"])
    theta2 = rng.choice(["0.1", "0.2", "0.5"])
    return mk_problem(apps, cluster, prev=AllocationMatrix(prev),
                      theta1=theta1, theta2=theta2)


def test_solve_matches_brute_force_sample():
    rng = random.Random(7)
    for _ in range(40):
        p = random_problem(rng)
        got = solve(p, budget=5.0)
        want = brute_force(p)
        assert got.status in (OPTIMAL, INFEASIBLE)
        if want.status == INFEASIBLE:
            assert got.status == INFEASIBLE
        else:
            assert got.status == OPTIMAL
            assert got.objective == want.objective
            ok, *_ = check_solution(p, got.x)
            assert ok


def test_export_lp_text_mentions_all_variables():
    cluster = mk_cluster([4, 16])
    p = mk_problem([mk_app("a", [1, 4])], cluster, theta1="1", theta2="1")
    text = export_lp_text(p)
    assert text.startswith("Maximize")
    assert "x_a_s0" in text and "l_a" in text
    assert "Subject To" in text and text.rstrip().endswith("End")


def test_allocate_fallback_on_infeasible():
    cluster = mk_cluster([8, 8])
    apps = [mk_app("a", [1, 1], n_max=8)]
    prev = AllocationMatrix({("a", "s0"): 1})
    res = optimizer.allocate(apps, cluster, prev, theta1="0", theta2="0")
    assert not res.accepted
    assert res.alloc.row("a") == {"s0": 1}
