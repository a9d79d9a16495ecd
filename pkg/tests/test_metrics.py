from fractions import Fraction

from dormalloc.metrics import (adjustment_flags, adjustment_overhead,
                               fairness_loss, utilization)
from dormalloc.model import (AllocationMatrix, ApplicationSpec, ClusterSpec,
                             ResourceVector, WorkloadProfile)

PROF = WorkloadProfile(total_work=1000, per_container_rate=1)


def mk_app(app_id, demand, weight=1, n_max=100, n_min=1):
    return ApplicationSpec(app_id=app_id, executor="t",
                           demand=ResourceVector(demand), weight=weight,
                           n_max=n_max, n_min=n_min, profile=PROF)


CLUSTER = ClusterSpec(resource_names=("cpu", "ram"),
                      slaves=(("s1", ResourceVector([8, 32])),
                              ("s2", ResourceVector([8, 32]))))


def test_utilization_sums_per_resource_fractions():
    apps = {"A": mk_app("A", [2, 4]), "B": mk_app("B", [1, 8])}
    alloc = AllocationMatrix({("A", "s1"): 3, ("B", "s2"): 2})
    total, per = utilization(alloc, apps, CLUSTER)
    # cpu: (3*2 + 2*1)/16 = 1/2; ram: (3*4 + 2*8)/64 = 28/64
    assert per == [Fraction(1, 2), Fraction(7, 16)]
    assert total == Fraction(15, 16)


def test_utilization_empty_alloc():
    total, per = utilization(AllocationMatrix({}), {}, CLUSTER)
    assert total == 0 and per == [0, 0]


def test_fairness_loss_from_definition():
    # two symmetric apps, shat = 1/2 each; actual shares 4/16 and 6/16
    apps = [mk_app("A", [1, 4]), mk_app("B", [1, 4])]
    alloc = AllocationMatrix({("A", "s1"): 4, ("B", "s2"): 6})
    # dominant is ram (4/64 > 1/16): actual A = 16/64, B = 24/64
    loss = fairness_loss(alloc, apps, CLUSTER)
    assert loss == abs(Fraction(1, 4) - Fraction(1, 2)) + \
        abs(Fraction(3, 8) - Fraction(1, 2))


def test_fairness_loss_respects_supplied_shat():
    apps = [mk_app("A", [1, 4])]
    alloc = AllocationMatrix({("A", "s1"): 4})
    loss = fairness_loss(alloc, apps, CLUSTER, shat={"A": Fraction(1, 4)})
    assert loss == 0


def test_adjustment_flags_and_overhead():
    prev = AllocationMatrix({("A", "s1"): 2, ("B", "s1"): 1, ("C", "s2"): 5})
    nxt = AllocationMatrix({("A", "s1"): 2, ("B", "s2"): 1, ("D", "s1"): 3})
    slaves = ("s1", "s2")
    # C completed, D is new: neither is carryover, neither is flagged
    flags = adjustment_flags(prev, nxt, ["A", "B"], slaves)
    assert flags == {"A": 0, "B": 1}
    assert adjustment_overhead(prev, nxt, ["A", "B"], slaves) == 1


def test_moving_containers_between_slaves_counts_as_adjustment():
    prev = AllocationMatrix({("A", "s1"): 2, ("A", "s2"): 2})
    nxt = AllocationMatrix({("A", "s1"): 3, ("A", "s2"): 1})
    # total count unchanged but placement differs
    assert adjustment_overhead(prev, nxt, ["A"], ("s1", "s2")) == 1
