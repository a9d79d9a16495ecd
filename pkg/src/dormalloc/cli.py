"""Command-line front end: load configs, run solves and simulations, emit
traces and summaries.

File formats are JSON documents tagged with a versioned header
``"format": "dormalloc-v1"`` and a ``kind`` field; all rational quantities
are serialized as fraction strings ("3/4"), never floats. CSV output uses
fixed 9-digit decimal formatting so golden files are byte-stable.

Exit codes: 0 success, 1 malformed input/config, 2 infeasible problem.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, asdict
from fractions import Fraction
from pathlib import Path

from . import optimizer, simulator
from . import workload as workload_mod
from .drf import theoretical_shares
from .model import (AllocationMatrix, ApplicationSpec, ClusterSpec,
                    ResourceVector, WorkloadProfile)

FORMAT = "dormalloc-v1"

PRESETS = {
    "dorm-1": (Fraction(2, 10), Fraction(1, 10)),
    "dorm-2": (Fraction(1, 10), Fraction(2, 10)),
    "dorm-3": (Fraction(1, 10), Fraction(1, 10)),
}

log = logging.getLogger("dormalloc")


class InputError(Exception):
    """Malformed input file or config; maps to exit code 1."""


# ---------------------------------------------------------------------------
# (de)serialization helpers


def _fr(value, where: str) -> Fraction:
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError) as e:
        raise InputError(f"{where}: not a rational number: {value!r}") from e


def _fs(value) -> str:
    return str(Fraction(value))


def _need(doc: dict, key: str, where: str):
    if key not in doc:
        raise InputError(f"{where}: missing field {key!r}")
    return doc[key]


def load_document(path: str, kind: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as e:
        raise InputError(f"{path}: {e.strerror or e}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"{path}:{e.lineno}: invalid JSON: {e.msg}") from e
    if not isinstance(doc, dict):
        raise InputError(f"{path}: expected a JSON object")
    if doc.get("format") != FORMAT:
        raise InputError(f"{path}: field 'format': expected {FORMAT!r}, "
                         f"got {doc.get('format')!r}")
    if doc.get("kind") != kind:
        raise InputError(f"{path}: field 'kind': expected {kind!r}, "
                         f"got {doc.get('kind')!r}")
    return doc


def cluster_to_doc(cluster: ClusterSpec) -> dict:
    return {
        "resources": list(cluster.resource_names),
        "slaves": [{"id": sid, "capacity": [_fs(q) for q in cap]}
                   for sid, cap in cluster.slaves],
    }


def cluster_from_doc(doc: dict, where: str = "cluster") -> ClusterSpec:
    names = _need(doc, "resources", where)
    slaves = []
    for i, s in enumerate(_need(doc, "slaves", where)):
        w = f"{where}.slaves[{i}]"
        slaves.append((_need(s, "id", w),
                       ResourceVector([_fr(q, f"{w}.capacity")
                                       for q in _need(s, "capacity", w)])))
    try:
        return ClusterSpec(resource_names=names, slaves=slaves)
    except ValueError as e:
        raise InputError(f"{where}: {e}") from e


def app_to_doc(app: ApplicationSpec) -> dict:
    return {
        "app_id": app.app_id,
        "executor": app.executor,
        "demand": [_fs(q) for q in app.demand],
        "weight": app.weight,
        "n_max": app.n_max,
        "n_min": app.n_min,
        "total_work": _fs(app.profile.total_work),
        "per_container_rate": _fs(app.profile.per_container_rate),
        "save_cost": _fs(app.profile.checkpoint_save_cost),
        "resume_cost": _fs(app.profile.resume_cost),
    }


def app_from_doc(doc: dict, where: str) -> ApplicationSpec:
    profile = WorkloadProfile(
        total_work=_fr(doc.get("total_work", "1"), f"{where}.total_work"),
        per_container_rate=_fr(doc.get("per_container_rate", "1"),
                               f"{where}.per_container_rate"),
        checkpoint_save_cost=_fr(doc.get("save_cost", "0"), f"{where}.save_cost"),
        resume_cost=_fr(doc.get("resume_cost", "0"), f"{where}.resume_cost"))
    try:
        return ApplicationSpec(
            app_id=_need(doc, "app_id", where),
            executor=_need(doc, "executor", where),
            demand=ResourceVector([_fr(q, f"{where}.demand")
                                   for q in _need(doc, "demand", where)]),
            weight=int(_need(doc, "weight", where)),
            n_max=int(_need(doc, "n_max", where)),
            n_min=int(_need(doc, "n_min", where)),
            profile=profile)
    except ValueError as e:
        raise InputError(f"{where}: {e}") from e


def alloc_to_doc(alloc: AllocationMatrix) -> dict:
    out: dict[str, dict[str, int]] = {}
    for (app_id, sid), n in sorted(alloc.items()):
        out.setdefault(app_id, {})[sid] = n
    return out


def alloc_from_doc(doc: dict, where: str) -> AllocationMatrix:
    entries = {}
    for app_id, row in doc.items():
        for sid, n in row.items():
            entries[(app_id, sid)] = int(n)
    try:
        return AllocationMatrix(entries)
    except ValueError as e:
        raise InputError(f"{where}: {e}") from e


def workload_to_doc(workload) -> dict:
    return {
        "format": FORMAT,
        "kind": "workload",
        "apps": [dict(app_to_doc(a), arrival=_fs(t)) for t, a in workload],
    }


def workload_from_doc(doc: dict):
    out = []
    for i, rec in enumerate(_need(doc, "apps", "workload")):
        where = f"apps[{i}]"
        t = _fr(_need(rec, "arrival", where), f"{where}.arrival")
        out.append((t, app_from_doc(rec, where)))
    return out


# ---------------------------------------------------------------------------
# run configuration


@dataclass(frozen=True)
class RunConfig:
    policy: str
    theta1: str
    theta2: str
    seed: int
    horizon: str
    cadence: str
    budget: float
    workload: str
    out: str

    def __post_init__(self):
        if self.policy not in ("dorm", "static"):
            raise InputError(f"policy must be dorm or static, got {self.policy!r}")
        t1, t2 = Fraction(self.theta1), Fraction(self.theta2)
        if not (0 <= t1 <= 1 and 0 <= t2 <= 1):
            raise InputError("theta values must lie in [0, 1]")
        if Fraction(self.cadence) <= 0:
            raise InputError("cadence must be positive")


def config_from_doc(doc: dict) -> RunConfig:
    fields = ("policy", "theta1", "theta2", "seed", "horizon", "cadence",
              "budget", "workload", "out")
    return RunConfig(**{f: _need(doc, f, "config") for f in fields})


def _thetas(args) -> tuple[Fraction, Fraction]:
    if args.preset is not None:
        return PRESETS[args.preset]
    t1 = Fraction(args.theta1) if args.theta1 is not None else Fraction(1, 10)
    t2 = Fraction(args.theta2) if args.theta2 is not None else Fraction(1, 10)
    return t1, t2


# ---------------------------------------------------------------------------
# CSV / summary writers


def write_metrics_csv(path: Path, trace, resource_names) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["time", "utilization", "fairness_loss",
                      "adjustment_overhead"]
                     + [f"u_{name}" for name in resource_names])
        for s in trace.samples:
            out.writerow([f"{float(s.time):.9f}",
                          f"{float(s.utilization):.9f}",
                          f"{float(s.fairness_loss):.9f}",
                          str(s.adjustment_overhead)]
                         + [f"{float(u):.9f}" for u in s.per_resource_util])


def write_apps_csv(path: Path, trace) -> None:
    def opt_time(t):
        return "" if t is None else f"{float(t):.9f}"

    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["app_id", "type", "submit", "start", "complete",
                      "downtime", "containers_time_integral"])
        for a in trace.apps:
            out.writerow([a.app_id, a.type_name,
                          f"{float(a.submit):.9f}",
                          opt_time(a.start), opt_time(a.complete),
                          f"{float(a.downtime_total):.9f}",
                          f"{float(a.containers_time_integral):.9f}"])


def read_apps_csv(path: str) -> dict[str, float]:
    """app_id -> completion duration (seconds) for completed apps."""
    durations = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            if row.get("complete"):
                durations[row["app_id"]] = (float(row["complete"])
                                            - float(row["submit"]))
    return durations


def read_metrics_csv(path: str) -> float:
    """Mean of the total-utilization column."""
    vals = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            vals.append(float(row["utilization"]))
    return sum(vals) / len(vals) if vals else 0.0


# ---------------------------------------------------------------------------
# subcommands


def cmd_solve(args) -> int:
    doc = load_document(args.state, "state")
    cluster = cluster_from_doc(_need(doc, "cluster", "state"))
    apps = [app_from_doc(a, f"apps[{i}]")
            for i, a in enumerate(_need(doc, "apps", "state"))]
    if not apps:
        raise InputError("no applications")
    prev = alloc_from_doc(doc.get("prev_alloc", {}), "prev_alloc")
    if args.preset is not None or args.theta1 is not None or args.theta2 is not None:
        theta1, theta2 = _thetas(args)
    else:
        theta1 = _fr(_need(doc, "theta1", "state"), "theta1")
        theta2 = _fr(_need(doc, "theta2", "state"), "theta2")

    shat = theoretical_shares(apps, cluster)
    try:
        problem = optimizer.build_problem(apps, cluster, prev, shat,
                                          theta1, theta2)
    except ValueError as e:
        raise InputError(str(e)) from e
    sol = optimizer.solve(problem, budget=args.budget)
    log.info("solve: status=%s objective=%s nodes=%d",
             sol.status, sol.objective, sol.node_count)

    out_doc = {
        "format": FORMAT,
        "kind": "solution",
        "theta1": _fs(theta1),
        "theta2": _fs(theta2),
        "status": sol.status,
        "objective": None if sol.objective is None else _fs(sol.objective),
        "x": alloc_to_doc(sol.x) if sol.x is not None else None,
        "l": {i: _fs(v) for i, v in sorted(sol.l.items())},
        "r": {i: int(v) for i, v in sorted(sol.r.items())},
        "node_count": sol.node_count,
    }
    text = json.dumps(out_doc, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if sol.status in (optimizer.OPTIMAL, optimizer.FEASIBLE) else 2


def cmd_simulate(args) -> int:
    theta1, theta2 = _thetas(args)
    config = RunConfig(policy=args.policy, theta1=str(theta1),
                       theta2=str(theta2), seed=args.seed,
                       horizon=str(Fraction(args.horizon)),
                       cadence=str(Fraction(args.cadence)),
                       budget=args.budget, workload=args.workload,
                       out=args.out)

    if args.workload == "paper":
        workload = workload_mod.paper_workload(args.seed)
    else:
        workload = workload_from_doc(load_document(args.workload, "workload"))
    if args.cluster:
        cluster = cluster_from_doc(
            _need(load_document(args.cluster, "cluster"), "cluster", "cluster"),
            "cluster")
    else:
        cluster = workload_mod.paper_cluster()

    if args.policy == "dorm":
        policy = simulator.DormPolicy(theta1, theta2, solver_budget=args.budget)
    else:
        try:
            counts = {a.executor: workload_mod.STATIC_CONTAINERS[a.executor]
                      for _, a in workload}
        except KeyError as e:
            raise InputError(f"no static container count for type {e.args[0]!r}")
        policy = simulator.StaticPolicy(counts)

    try:
        trace = simulator.run(workload, cluster, policy, seed=args.seed,
                              horizon=Fraction(args.horizon),
                              cadence=Fraction(args.cadence))
    except ValueError as e:
        raise InputError(str(e)) from e

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = args.policy
    metrics_path = out_dir / f"{name}.csv"
    apps_path = out_dir / f"{name}_apps.csv"
    summary_path = out_dir / f"{name}_summary.json"
    write_metrics_csv(metrics_path, trace, cluster.resource_names)
    write_apps_csv(apps_path, trace)

    summary = {"format": FORMAT, "kind": "summary",
               "config": asdict(config)}
    summary.update(trace.summary())
    if args.baseline:
        base_util = read_metrics_csv(args.baseline)
        if base_util > 0:
            summary["utilization_vs_static"] = (summary["mean_utilization"]
                                                / base_util)
        stem = args.baseline[:-4] if args.baseline.endswith(".csv") \
            else args.baseline
        base_apps = f"{stem}_apps.csv"
        if os.path.exists(base_apps):
            base_dur = read_apps_csv(base_apps)
            ours = {a.app_id: float(a.complete - a.submit)
                    for a in trace.apps if a.complete is not None}
            common = sorted(set(base_dur) & set(ours))
            if common:
                summary["mean_speedup_vs_static"] = (
                    sum(base_dur[i] / ours[i] for i in common) / len(common))
    summary_path.write_text(json.dumps(summary, indent=2) + "\n")
    log.info("simulate: wrote %s, %s, %s", metrics_path, apps_path, summary_path)
    return 0


def cmd_gen_workload(args) -> int:
    workload = workload_mod.paper_workload(args.seed)
    text = json.dumps(workload_to_doc(workload), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_theta_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--theta1")
    p.add_argument("--theta2")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dormalloc",
        description="Utilization-fairness cluster allocation engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one allocation problem")
    p.add_argument("state", help="dormalloc-v1 state file")
    _add_theta_flags(p)
    p.add_argument("--budget", type=float, default=10.0,
                   help="solver budget in nominal seconds")
    p.add_argument("--out", help="solution file (default: stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="replay a workload under a policy")
    p.add_argument("--workload", default="paper",
                   help="'paper' (the built-in 50-app mix) or a "
                        "dormalloc-v1 workload file")
    p.add_argument("--policy", choices=("dorm", "static"), default="dorm")
    _add_theta_flags(p)
    p.add_argument("--cluster", help="dormalloc-v1 cluster file "
                                     "(default: the 20-slave testbed)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", default="86400")
    p.add_argument("--cadence", default="300")
    p.add_argument("--budget", type=float, default=1.0,
                   help="per-reallocation solver budget in nominal seconds")
    p.add_argument("--baseline",
                   help="baseline metrics CSV for comparison fields")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen-workload",
                       help="generate the built-in 50-app workload")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="workload file (default: stdout)")
    p.set_defaults(func=cmd_gen_workload)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("DORMALLOC_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
