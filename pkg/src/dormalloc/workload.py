"""Synthetic workload generation: the seven application templates, a
log-normal duration model, and Poisson arrivals.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from statistics import NormalDist

from .model import ApplicationSpec, ClusterSpec, ResourceVector, WorkloadProfile

# duration model anchors: median 12 h (assumption), P(duration > 6 h) = 0.9
MEDIAN_DURATION = 43200.0
OVER_6H_PROB = 0.9
SIX_HOURS = 21600.0

MEAN_INTERARRIVAL = 1200  # seconds

DEFAULT_SAVE_COST = Fraction(130)
DEFAULT_RESUME_COST = Fraction(130)


@dataclass(frozen=True)
class WorkloadTemplate:
    type_name: str
    demand: ResourceVector
    weight: int
    n_max: int
    n_min: int
    count: int
    static_containers: int
    duration_scale: Fraction  # per-type multiplier on the sampled duration
    per_container_rate: Fraction = Fraction(1)

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")


def _rv(cpu, gpu, ram) -> ResourceVector:
    return ResourceVector([cpu, gpu, ram])


RESOURCE_NAMES = ("cpu", "gpu", "ram")

TEMPLATES = (
    WorkloadTemplate("MxNet/LR", _rv(2, 0, 8), 1, 32, 1, 20, 8, Fraction(1)),
    WorkloadTemplate("TensorFlow/MF", _rv(2, 0, 6), 2, 32, 1, 20, 8, Fraction(1)),
    WorkloadTemplate("MPI-Caffe/CaffeNet", _rv(4, 0, 6), 4, 8, 1, 6, 4, Fraction(1)),
    WorkloadTemplate("MxNet/VGG-16", _rv(4, 1, 32), 1, 5, 1, 1, 2, Fraction(3, 2)),
    WorkloadTemplate("TensorFlow/GoogLeNet", _rv(6, 1, 16), 1, 5, 1, 1, 2, Fraction(3, 2)),
    WorkloadTemplate("Petuum/AlexNet", _rv(6, 1, 16), 2, 5, 1, 1, 2, Fraction(3, 2)),
    WorkloadTemplate("MPI-Caffe/ResNet-50", _rv(4, 1, 32), 4, 5, 1, 1, 3, Fraction(3, 2)),
)

STATIC_CONTAINERS = {t.type_name: t.static_containers for t in TEMPLATES}


def duration_sigma(median: float = MEDIAN_DURATION,
                   over_6h_prob: float = OVER_6H_PROB) -> float:
    """Log-normal sigma fitted so P(duration > 6h) hits the target."""
    z = NormalDist().inv_cdf(over_6h_prob)
    if z <= 0:
        raise ValueError("over_6h_prob must exceed 0.5")
    return math.log(median / SIX_HOURS) / z


def duration_model(seed: int, n: int = 1, median: float = MEDIAN_DURATION,
                   over_6h_prob: float = OVER_6H_PROB,
                   sigma: float | None = None) -> list[float]:
    """Sample n app durations (seconds, at the reference container count).
    sigma=0 degenerates to the constant median."""
    rng = random.Random(seed)
    if sigma is None:
        sigma = duration_sigma(median, over_6h_prob)
    mu = math.log(median)
    if sigma == 0:
        return [median] * n
    return [rng.lognormvariate(mu, sigma) for _ in range(n)]


def paper_cluster() -> ClusterSpec:
    """20 slaves summing to the testbed totals ⟨240 CPU, 5 GPU, 2560 GB⟩.

    The last four slaves carry a whole GPU each; the remaining GPU
    capacity is spread as 1/16-GPU slivers so every capacity stays
    positive while a 1-GPU container still only fits on the whole-GPU
    slaves. GPU slaves sort last so first-fit packing reaches them only
    when the CPU slaves are full.
    """
    slaves = []
    for i in range(20):
        gpu = Fraction(1) if i >= 16 else Fraction(1, 16)
        slaves.append((f"s{i:02d}", _rv(12, gpu, 128)))
    return ClusterSpec(slaves=slaves, resource_names=list(RESOURCE_NAMES))


def paper_workload(seed: int, mean_interarrival=MEAN_INTERARRIVAL,
                   save_cost=DEFAULT_SAVE_COST,
                   resume_cost=DEFAULT_RESUME_COST):
    """50 apps per the seven templates, shuffled, Poisson arrivals.

    Returns a sorted list of (time, ApplicationSpec). total_work is the
    sampled duration times the template's static container count, so an
    app at its static count finishes in exactly its sampled duration.
    """
    rng = random.Random(seed)
    mean_interarrival = float(mean_interarrival)
    types: list[WorkloadTemplate] = []
    for t in TEMPLATES:
        types.extend([t] * t.count)
    rng.shuffle(types)

    sigma = duration_sigma()
    mu = math.log(MEDIAN_DURATION)

    out = []
    clock = Fraction(0)
    for idx, tpl in enumerate(types):
        clock += Fraction(round(rng.expovariate(1.0 / mean_interarrival)))
        dur = rng.lognormvariate(mu, sigma) * float(tpl.duration_scale)
        dur_s = max(600, round(dur))
        profile = WorkloadProfile(
            total_work=Fraction(dur_s) * tpl.static_containers * tpl.per_container_rate,
            per_container_rate=tpl.per_container_rate,
            checkpoint_save_cost=save_cost,
            resume_cost=resume_cost)
        app = ApplicationSpec(
            app_id=f"app{idx:03d}", executor=tpl.type_name,
            demand=tpl.demand, weight=tpl.weight,
            n_max=tpl.n_max, n_min=tpl.n_min, profile=profile)
        out.append((clock, app))
    return out
