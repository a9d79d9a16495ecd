import statistics
from collections import Counter
from fractions import Fraction

from dormalloc.model import total_capacity
from dormalloc.workload import (MEDIAN_DURATION, SIX_HOURS, TEMPLATES,
                                duration_model, duration_sigma, paper_cluster,
                                paper_workload)


def test_template_counts_and_shapes():
    counts = {t.type_name: t.count for t in TEMPLATES}
    assert sum(counts.values()) == 50
    assert sorted(counts.values(), reverse=True) == [20, 20, 6, 1, 1, 1, 1]
    by_name = {t.type_name: t for t in TEMPLATES}
    g = by_name["TensorFlow/GoogLeNet"]
    assert list(g.demand) == [6, 1, 16]
    assert g.weight == 1 and g.n_max == 5
    # gpu types run at 1.5x sampled duration
    assert all(t.duration_scale == Fraction(3, 2)
               for t in TEMPLATES if t.demand[1] > 0)


def test_cluster_totals():
    cluster = paper_cluster()
    assert len(cluster.slave_ids) == 20
    assert list(total_capacity(cluster)) == [240, 5, 2560]
    # exactly four slaves can host a whole-GPU container
    whole = [sid for sid in cluster.slave_ids if cluster.capacity(sid)[1] >= 1]
    assert len(whole) == 4


def test_workload_determinism():
    a = paper_workload(11)
    b = paper_workload(11)
    assert [(t, app.app_id, app.executor, app.profile.total_work)
            for t, app in a] == \
        [(t, app.app_id, app.executor, app.profile.total_work)
         for t, app in b]
    c = paper_workload(12)
    assert [t for t, _ in a] != [t for t, _ in c]


def test_workload_respects_template_mix():
    wl = paper_workload(5)
    assert len(wl) == 50
    mix = Counter(app.executor for _, app in wl)
    assert mix == {t.type_name: t.count for t in TEMPLATES}
    times = [t for t, _ in wl]
    assert times == sorted(times)
    for _, app in wl:
        tpl = next(t for t in TEMPLATES if t.type_name == app.executor)
        # total_work = duration * static containers, with a 10-minute floor
        assert app.profile.total_work >= 600 * tpl.static_containers
        assert app.n_max == tpl.n_max and app.weight == tpl.weight


def test_duration_model_anchors():
    samples = duration_model(99, n=10_000)
    over = sum(1 for d in samples if d > SIX_HOURS) / len(samples)
    assert 0.87 <= over <= 0.93
    med = statistics.median(samples)
    assert abs(med - MEDIAN_DURATION) / MEDIAN_DURATION < 0.05


def test_duration_model_sigma_zero_is_constant():
    assert duration_model(1, n=5, sigma=0) == [MEDIAN_DURATION] * 5


def test_duration_sigma_consistency():
    import math
    sigma = duration_sigma()
    # by construction: P(lognorm(mu, sigma) > 6h) = over_6h_prob
    z = (math.log(MEDIAN_DURATION) - math.log(SIX_HOURS)) / sigma
    from statistics import NormalDist
    assert abs(NormalDist().cdf(z) - 0.9) < 1e-12
