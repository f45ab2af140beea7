"""Workload generation and the three benchmark sweeps.

A sweep varies exactly one of (query points per set, data points, number of
query sets) while the other two stay fixed, builds fresh indexes per seed,
resets the store counters after the build, and measures both engines on
identical trees with cold caches. Rows are emitted as CSV plus plot-ready
two-column .dat files of per-parameter means.
"""

import csv
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError, VerificationError
from .geometry import Point
from .n2s2 import n2s2_run
from .rstar import bulk_build
from .skyline import bbs_run
from .storage import BlockStore, StoreConfig

CSV_HEADER = ["phase", "param", "seed", "engine", "io_logical", "io_physical",
              "heap_insertions", "cpu_time_s", "wall_time_s", "skyline_size"]
TIME_COLUMNS = ("cpu_time_s", "wall_time_s")
PHASES = ("query_size", "data_size", "set_count")
METRIC_COLUMNS = ("io_logical", "io_physical", "heap_insertions",
                  "cpu_time_s", "wall_time_s", "skyline_size")

ENGINES = {
    "bbs": lambda data, queries, priority: bbs_run(data, queries),
    "n2s2": lambda data, queries, priority: n2s2_run(data, queries, priority=priority),
}


@dataclass
class Workload:
    seed: int
    n_data: int
    m: int
    n_query_per_set: int
    d: int = 2
    distribution: str = "uniform"

    def __post_init__(self):
        if min(self.n_data, self.m, self.n_query_per_set) < 1:
            raise UsageError("workload counts must be at least 1")
        if self.d < 2:
            raise UsageError("d must be at least 2")
        if self.distribution != "uniform":
            raise UsageError(f"unsupported distribution {self.distribution!r}")


def generate(w: Workload):
    """Deterministic uniform points on the unit cube: data set plus m query sets."""
    rng = np.random.default_rng(w.seed)
    data = [Point(i, tuple(row)) for i, row in enumerate(rng.random((w.n_data, w.d)))]
    query_sets = []
    for _ in range(w.m):
        coords = rng.random((w.n_query_per_set, w.d))
        query_sets.append([Point(i, tuple(row)) for i, row in enumerate(coords)])
    return data, query_sets


@dataclass
class SweepSpec:
    phase: str
    values: list  # the varying parameter's grid
    seeds: list
    n_data: int = 2000
    m: int = 2
    n_query_per_set: int = 1000
    priority: str = "improved"

    def __post_init__(self):
        if self.phase not in PHASES:
            raise UsageError(f"unknown phase {self.phase!r}")
        if not self.values or not self.seeds:
            raise UsageError("sweep needs values and seeds")

    def workload(self, value, seed) -> Workload:
        params = {"n_data": self.n_data, "m": self.m,
                  "n_query_per_set": self.n_query_per_set}
        params[_VARYING[self.phase]] = value
        return Workload(seed=seed, **params)


_VARYING = {
    "query_size": "n_query_per_set",
    "data_size": "n_data",
    "set_count": "m",
}


def paper_spec(phase: str, seeds=(0, 1, 2, 3, 4)) -> SweepSpec:
    """Grids at the scale of the original experiments (hours of build time)."""
    if phase == "query_size":
        return SweepSpec(phase, values=[10000, 15000, 20000, 25000],
                         seeds=list(seeds), n_data=20000, m=2)
    if phase == "data_size":
        return SweepSpec(phase, values=[10000, 25000, 50000, 100000],
                         seeds=list(seeds), m=2, n_query_per_set=10000)
    if phase == "set_count":
        return SweepSpec(phase, values=[1, 2, 3], seeds=list(seeds),
                         n_data=20000, n_query_per_set=10000)
    raise UsageError(f"unknown phase {phase!r}")


def desk_spec(phase: str, seeds=(0, 1, 2, 3, 4)) -> SweepSpec:
    """Scaled-down grids that finish in minutes on a desktop."""
    if phase == "query_size":
        return SweepSpec(phase, values=[2500, 5000, 10000],
                         seeds=list(seeds), n_data=5000, m=2)
    if phase == "data_size":
        return SweepSpec(phase, values=[5000, 10000, 20000],
                         seeds=list(seeds), m=2, n_query_per_set=2500)
    if phase == "set_count":
        return SweepSpec(phase, values=[1, 2, 3], seeds=list(seeds),
                         n_data=2000, n_query_per_set=1000)
    raise UsageError(f"unknown phase {phase!r}")


def build_instance(data_points, query_sets, workdir,
                   block_size=1024, cache_blocks=512):
    """Build one data tree and one tree per query set inside ``workdir``.

    Counters are reset after the build so query-phase I/O starts at zero.
    Returns (data_tree, query_trees, stores).
    """
    cfg = StoreConfig(block_size=block_size, cache_blocks=cache_blocks)
    stores = []
    try:
        store = BlockStore(os.path.join(workdir, "data.idx"), cfg)
        stores.append(store)
        data_tree = bulk_build(data_points, store)
        query_trees = []
        for i, qs in enumerate(query_sets):
            qstore = BlockStore(os.path.join(workdir, f"q{i + 1}.idx"),
                                StoreConfig(block_size=block_size, cache_blocks=cache_blocks))
            stores.append(qstore)
            query_trees.append(bulk_build(qs, qstore))
    except BaseException:
        for s in stores:
            s.close()
        raise
    for s in stores:
        s.clear_cache()
        s.reset_counters()
    return data_tree, query_trees, stores


def run_engine(engine: str, data_tree, query_trees, priority="improved"):
    """Run one engine on prebuilt trees, starting from cold caches."""
    if engine not in ENGINES:
        raise UsageError(f"unknown engine {engine!r}")
    for tree in [data_tree] + list(query_trees):
        tree.store.clear_cache()
        tree.store.reset_counters()
    return ENGINES[engine](data_tree, query_trees, priority)


def run_sweep(spec: SweepSpec, engines=("bbs", "n2s2"), workdir=None,
              block_size=1024, cache_blocks=512, progress=None):
    """Execute a sweep; returns one row dict per (value, seed, engine).

    Both engines must agree on the skyline id set of every instance;
    disagreement aborts the sweep (correctness precedes measurement).
    """
    rows = []
    for value in spec.values:
        for seed in spec.seeds:
            w = spec.workload(value, seed)
            data_points, query_sets = generate(w)
            with tempfile.TemporaryDirectory(dir=workdir) as tmp:
                data_tree, query_trees, stores = build_instance(
                    data_points, query_sets, tmp, block_size, cache_blocks)
                try:
                    id_sets = {}
                    for engine in engines:
                        result = run_engine(engine, data_tree, query_trees,
                                            spec.priority)
                        id_sets[engine] = {p.id for p, _ in result.entries}
                        m = result.metrics
                        rows.append({
                            "phase": spec.phase, "param": value, "seed": seed,
                            "engine": engine,
                            "io_logical": m.io_logical,
                            "io_physical": m.io_physical,
                            "heap_insertions": m.heap_insertions,
                            "cpu_time_s": m.cpu_time_s,
                            "wall_time_s": m.wall_time_s,
                            "skyline_size": len(result.entries),
                        })
                        if progress is not None:
                            progress(spec.phase, value, seed, engine, m)
                    first = id_sets[engines[0]]
                    for engine, ids in id_sets.items():
                        if ids != first:
                            raise VerificationError(
                                f"engines disagree at {spec.phase}={value} seed={seed}: "
                                f"{engines[0]} vs {engine}"
                            )
                finally:
                    for s in stores:
                        s.close()
    return rows


def aggregate(rows):
    """Mean of every metric over seeds, per (phase, param, engine)."""
    groups = {}
    for r in rows:
        groups.setdefault((r["phase"], r["param"], r["engine"]), []).append(r)
    out = []
    for (phase, param, engine), grp in sorted(groups.items(), key=str):
        agg = {"phase": phase, "param": param, "engine": engine,
               "seeds": len(grp)}
        for col in METRIC_COLUMNS:
            agg[col] = sum(r[col] for r in grp) / len(grp)
        out.append(agg)
    return out


def write_csv(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_HEADER)
        writer.writeheader()
        for r in rows:
            writer.writerow({k: r[k] for k in CSV_HEADER})


def write_mean_csv(aggregated, path):
    fields = ["phase", "param", "engine", "seeds", *METRIC_COLUMNS]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for r in aggregated:
            writer.writerow(r)


def write_dat_files(aggregated, out_dir):
    """One two-column (param, mean metric) file per (phase, engine, metric)."""
    written = []
    combos = {}
    for r in aggregated:
        combos.setdefault((r["phase"], r["engine"]), []).append(r)
    for (phase, engine), grp in sorted(combos.items()):
        grp = sorted(grp, key=lambda r: r["param"])
        for metric in METRIC_COLUMNS:
            path = os.path.join(out_dir, f"{phase}_{engine}_{metric}.dat")
            with open(path, "w") as fh:
                for r in grp:
                    fh.write(f"{r['param']} {r[metric]}\n")
            written.append(path)
    return written
