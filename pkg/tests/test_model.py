from fractions import Fraction

import pytest

from dormalloc.model import (AllocationMatrix, ApplicationSpec, ClusterSpec,
                             ResourceVector, WorkloadProfile, as_frac,
                             check_capacity, containers_of, total_capacity)


def mk_app(app_id, demand, n_min=1, n_max=10, weight=1):
    return ApplicationSpec(
        app_id=app_id, executor="test", demand=ResourceVector(demand),
        weight=weight, n_max=n_max, n_min=n_min,
        profile=WorkloadProfile(total_work=100, per_container_rate=1))


def test_as_frac_decimal_strings():
    assert as_frac(0.1) == Fraction(1, 10)
    assert as_frac("3/4") == Fraction(3, 4)
    assert as_frac(2) == Fraction(2)


def test_resource_vector_validation():
    with pytest.raises(ValueError):
        ResourceVector([1, -1])
    v = ResourceVector([4, 16])
    with pytest.raises(AttributeError):
        v.quantities = ()


def test_resource_vector_add_and_scale():
    a = ResourceVector([1, 2])
    b = ResourceVector([3, 4])
    assert a + b == ResourceVector([4, 6])
    assert a.scale("1/2") == ResourceVector([Fraction(1, 2), 1])
    with pytest.raises(ValueError):
        a + ResourceVector([1])


def test_cluster_spec_validation():
    with pytest.raises(ValueError):
        ClusterSpec(resource_names=("cpu",), slaves=())
    with pytest.raises(ValueError):
        ClusterSpec(resource_names=("cpu",),
                    slaves=(("s1", ResourceVector([1])),
                            ("s1", ResourceVector([2]))))
    with pytest.raises(ValueError):
        ClusterSpec(resource_names=("cpu", "ram"),
                    slaves=(("s1", ResourceVector([1])),))
    with pytest.raises(ValueError):
        ClusterSpec(resource_names=("cpu",),
                    slaves=(("s1", ResourceVector([0])),))


def test_total_capacity_sums_slaves():
    cluster = ClusterSpec(
        resource_names=("cpu", "ram"),
        slaves=(("s1", ResourceVector([4, 16])),
                ("s2", ResourceVector([4, 16]))))
    assert total_capacity(cluster) == ResourceVector([8, 32])


def test_total_capacity_single_slave_identity():
    cap = ResourceVector([12, Fraction(1, 4), 128])
    cluster = ClusterSpec(resource_names=("cpu", "gpu", "ram"),
                          slaves=(("s1", cap),))
    assert total_capacity(cluster) == cap


def test_application_spec_validation():
    with pytest.raises(ValueError):
        mk_app("a", [1], n_min=0)
    with pytest.raises(ValueError):
        mk_app("a", [1], n_min=3, n_max=2)
    with pytest.raises(ValueError):
        mk_app("a", [0, 0])
    with pytest.raises(ValueError):
        ApplicationSpec(app_id="a", executor="x", demand=ResourceVector([1]),
                        weight=0, n_max=1, n_min=1,
                        profile=WorkloadProfile(1, 1))


def test_allocation_matrix_basics():
    x = AllocationMatrix({("A", "s1"): 2, ("A", "s2"): 3, ("B", "s1"): 0})
    assert containers_of(x, "A") == 5
    assert containers_of(x, "missing") == 0
    assert x.get("B", "s1") == 0
    assert x.app_ids == {"A"}
    assert x.row("A") == {"s1": 2, "s2": 3}
    with pytest.raises(ValueError):
        AllocationMatrix({("A", "s1"): -1})
    with pytest.raises(ValueError):
        AllocationMatrix({("A", "s1"): 1.5})


def test_allocation_matrix_with_row_and_restrict():
    x = AllocationMatrix({("A", "s1"): 2, ("B", "s1"): 1})
    y = x.with_row("A", {"s2": 4})
    assert y.row("A") == {"s2": 4}
    assert y.row("B") == {"s1": 1}
    z = y.restricted_to(["B"])
    assert z.app_ids == {"B"}


def test_check_capacity():
    cluster = ClusterSpec(resource_names=("cpu",),
                          slaves=(("s1", ResourceVector([4])),))
    apps = {"A": mk_app("A", [2])}
    assert check_capacity(AllocationMatrix({("A", "s1"): 2}), apps, cluster)
    assert not check_capacity(AllocationMatrix({("A", "s1"): 3}), apps, cluster)
