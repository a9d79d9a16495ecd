from fractions import Fraction

from dormalloc.adjustment import DEFAULT_CHURN_LATENCY, plan_adjustment
from dormalloc.model import (AllocationMatrix, ApplicationSpec, ClusterSpec,
                             ResourceVector, WorkloadProfile, containers_of)
from dormalloc import optimizer


def mk_app(app_id, demand, weight=1, n_max=100, n_min=1,
           save=130, resume=130):
    return ApplicationSpec(
        app_id=app_id, executor="t", demand=ResourceVector(demand),
        weight=weight, n_max=n_max, n_min=n_min,
        profile=WorkloadProfile(total_work=100000, per_container_rate=1,
                                checkpoint_save_cost=save, resume_cost=resume))


SLAVES = ("s1", "s2", "s3")


def test_no_entries_when_nothing_changed():
    apps = {"A": mk_app("A", [1])}
    alloc = AllocationMatrix({("A", "s1"): 2})
    plan = plan_adjustment(alloc, alloc, apps, ["A"], SLAVES)
    assert len(plan) == 0
    assert plan.affected_apps() == set()


def test_downtime_arithmetic():
    # save 30s + 1s/container churn * 4 changed + resume 30s = 64s
    apps = {"A": mk_app("A", [1], save=30, resume=30)}
    prev = AllocationMatrix({("A", "s1"): 4})
    nxt = AllocationMatrix({("A", "s1"): 2, ("A", "s2"): 2})
    plan = plan_adjustment(prev, nxt, apps, ["A"], SLAVES, churn_latency=1)
    (entry,) = plan
    assert entry.downtime == 64
    assert entry.containers_destroyed == (("s1", 2),)
    assert entry.containers_created == (("s2", 2),)


def test_default_churn_latency():
    apps = {"A": mk_app("A", [1])}
    prev = AllocationMatrix({("A", "s1"): 4})
    nxt = AllocationMatrix({("A", "s1"): 1})
    plan = plan_adjustment(prev, nxt, apps, ["A"], SLAVES)
    (entry,) = plan
    assert entry.downtime == 130 + DEFAULT_CHURN_LATENCY * 3 + 130


def test_new_apps_are_not_adjustment_entries():
    apps = {"A": mk_app("A", [1]), "B": mk_app("B", [1])}
    prev = AllocationMatrix({("A", "s1"): 2})
    nxt = AllocationMatrix({("A", "s1"): 2, ("B", "s2"): 3})
    plan = plan_adjustment(prev, nxt, apps, ["A"], SLAVES)
    assert len(plan) == 0


def test_saves_at_timestamp():
    apps = {"A": mk_app("A", [1])}
    prev = AllocationMatrix({("A", "s1"): 2})
    nxt = AllocationMatrix({("A", "s1"): 1})
    plan = plan_adjustment(prev, nxt, apps, ["A"], SLAVES,
                           at_time=Fraction(7200))
    (entry,) = plan
    assert entry.saves_at == 7200


def test_shrink_walkthrough_via_optimizer():
    # One big mixed slave plus two small cpu/ram slaves. App1 is pinned at
    # two containers on the small slaves; App2 holds four containers on s1;
    # App3 (gpu-demanding, weight 2) arrives. Fitting two App3 containers on
    # s1 requires destroying exactly two App2 containers there, and App2 is
    # the only carryover app whose placement changes.
    sliver = Fraction(1, 16)
    cluster = ClusterSpec(
        resource_names=("cpu", "gpu", "ram"),
        slaves=(("s1", ResourceVector([10, 2, 36])),
                ("s2", ResourceVector([2, sliver, 16])),
                ("s3", ResourceVector([2, sliver, 16]))))
    app1 = mk_app("App1", [1, 0, 8], n_max=2, n_min=2)
    app2 = mk_app("App2", [2, 0, 8], n_max=4)
    app3 = mk_app("App3", [1, 1, 8], weight=2, n_max=5)
    prev = AllocationMatrix({("App1", "s2"): 1, ("App1", "s3"): 1,
                             ("App2", "s1"): 4})
    res = optimizer.allocate([app1, app2, app3], cluster, prev,
                             theta1=Fraction(1, 2), theta2=Fraction(1, 2),
                             budget=5.0)
    assert res.accepted
    apps = {a.app_id: a for a in (app1, app2, app3)}
    plan = plan_adjustment(prev, res.alloc, apps, ["App1", "App2"],
                           cluster.slave_ids)
    assert plan.affected_apps() == {"App2"}
    (entry,) = plan
    assert entry.containers_destroyed == (("s1", 2),)
    assert entry.containers_created == ()
    assert containers_of(res.alloc, "App3") == 2
