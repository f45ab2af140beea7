"""Command-line surface: dataset generation, index build, queries, verification
and benchmark sweeps.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 data/format
error, 4 I/O error. Human-readable output goes to stdout, diagnostics to
stderr, machine-readable output only to files.
"""

import argparse
import math
import os
import sys

from . import bench
from .errors import (DataError, FormatError, NnskyError, StorageError,
                     UsageError, VerificationError)
from .geometry import Point
from .n2s2 import n2s2_run
from .rstar import RTree, bulk_build
from .skyline import bbs_run, dominates
from .storage import BlockStore, StoreConfig
from .verify import verify_trials

DEFAULT_CACHE = 512


def _cache_default():
    env = os.environ.get("NNSKY_CACHE_BLOCKS")
    if env is None:
        return DEFAULT_CACHE
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"NNSKY_CACHE_BLOCKS is not an integer: {env!r}") from None


def write_points(path, points):
    d = len(points[0].coords)
    with open(path, "w") as fh:
        fh.write("id," + ",".join(f"x{k + 1}" for k in range(d)) + "\n")
        for p in points:
            fh.write(f"{p.id}," + ",".join(repr(c) for c in p.coords) + "\n")


def read_points(path):
    points = []
    seen = set()
    d = None
    try:
        fh = open(path)
    except OSError as exc:
        raise StorageError(f"cannot open {path}: {exc}") from exc
    with fh:
        header = fh.readline()
        if not header.startswith("id,"):
            raise DataError(f"{path}: missing 'id,x1,...' header")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            try:
                pid = int(fields[0])
                coords = tuple(float(v) for v in fields[1:])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            if d is None:
                if len(coords) < 2:
                    raise DataError(f"{path}:{lineno}: need at least 2 coordinates")
                d = len(coords)
            elif len(coords) != d:
                raise DataError(f"{path}:{lineno}: inconsistent dimensionality")
            if pid in seen:
                raise DataError(f"{path}:{lineno}: duplicate id {pid}")
            if not coords or any(not math.isfinite(c) for c in coords):
                raise DataError(f"{path}:{lineno}: non-finite coordinate")
            seen.add(pid)
            points.append(Point(pid, coords))
    if not points:
        raise DataError(f"{path}: no points")
    return points


def cmd_gen(args):
    data, query_sets = bench.generate(bench.Workload(
        seed=args.seed, n_data=args.n, m=args.m, n_query_per_set=args.q))
    os.makedirs(args.out_dir, exist_ok=True)
    write_points(os.path.join(args.out_dir, "data.csv"), data)
    for i, qs in enumerate(query_sets):
        write_points(os.path.join(args.out_dir, f"q{i + 1}.csv"), qs)
    print(f"wrote data.csv and q1.csv..q{args.m}.csv to {args.out_dir}")
    return 0


def cmd_build(args):
    points = read_points(args.points)
    if os.path.exists(args.index):
        os.remove(args.index)
    with BlockStore(args.index, StoreConfig(args.block_size, args.cache)) as store:
        tree = bulk_build(points, store)
        print(f"height {tree.height}")
        print(f"nodes {store.block_count - 1}")
        print(f"fanout {tree.config.max_fanout}")
    return 0


def cmd_query(args):
    cache = args.cache
    stores = [BlockStore(args.data, StoreConfig(args.block_size, cache))]
    try:
        data_tree = RTree.open(stores[0])
        query_trees = []
        for path in args.query:
            store = BlockStore(path, StoreConfig(args.block_size, cache))
            stores.append(store)
            qt = RTree.open(store)
            if qt.d != data_tree.d:
                raise DataError(f"{path}: dimensionality {qt.d} != data {data_tree.d}")
            query_trees.append(qt)
        for s in stores:
            s.clear_cache()
            s.reset_counters()
        if args.engine == "bbs":
            result = bbs_run(data_tree, query_trees)
        else:
            result = n2s2_run(data_tree, query_trees, priority=args.priority)
    finally:
        for s in stores:
            s.close()
    for p, attrs in result.entries:
        coords = " ".join(repr(c) for c in p.coords)
        vals = " ".join(f"{a:.9f}" for a in attrs)
        print(f"{p.id} {coords} {vals}")
    m = result.metrics
    print("-- metrics --")
    print(f"skyline_size {len(result.entries)}")
    print(f"io_logical {m.io_logical}")
    print(f"io_physical {m.io_physical}")
    print(f"heap_insertions {m.heap_insertions}")
    print(f"cpu_time_s {m.cpu_time_s:.6f}")
    print(f"wall_time_s {m.wall_time_s:.6f}")
    return 0


def cmd_verify(args):
    dominance = None
    if os.environ.get("NNSKY_FAULT_FLIP_DOMINANCE"):
        # negative-control hook: makes the oracle disagree on purpose
        dominance = lambda a, b: dominates(b, a)  # noqa: E731

    failures = 0

    def report(r):
        status = "pass" if r.ok else "FAIL"
        print(f"trial seed={r.seed} skyline={r.skyline_size} {status}")
        for d in r.diffs:
            print(f"  {d}", file=sys.stderr)

    reports = verify_trials(seed=args.seed, n=args.n, m=args.m, q=args.q,
                            trials=args.trials, dominance=dominance,
                            report=report)
    failures = sum(1 for r in reports if not r.ok)
    if failures:
        print(f"{failures}/{len(reports)} trials failed", file=sys.stderr)
        return 1
    print(f"all {len(reports)} trials agree")
    return 0


def cmd_bench(args):
    spec = (bench.paper_spec if args.scale == "paper" else bench.desk_spec)(args.phase)
    if args.seeds is not None:
        spec.seeds = list(range(args.seeds))
    if args.values is not None:
        spec.values = args.values
    if args.n is not None:
        spec.n_data = args.n
    if args.q is not None:
        spec.n_query_per_set = args.q
    if args.m is not None:
        spec.m = args.m
    os.makedirs(args.out, exist_ok=True)

    def progress(phase, value, seed, engine, metrics):
        print(f"{phase} param={value} seed={seed} engine={engine} "
              f"io={metrics.io_logical} heap={metrics.heap_insertions}",
              file=sys.stderr)

    rows = bench.run_sweep(spec, cache_blocks=args.cache, progress=progress)
    bench.write_csv(rows, os.path.join(args.out, f"{args.phase}.csv"))
    agg = bench.aggregate(rows)
    bench.write_mean_csv(agg, os.path.join(args.out, f"{args.phase}_mean.csv"))
    bench.write_dat_files(agg, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _positive(name):
    def parse(value):
        v = int(value)
        if v < 1:
            raise argparse.ArgumentTypeError(f"{name} must be at least 1")
        return v
    return parse


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nnsky",
        description="Spatial nearest-neighbor skyline query engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate random data and query point files")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=_positive("--n"), required=True)
    p.add_argument("--m", type=_positive("--m"), required=True)
    p.add_argument("--q", type=_positive("--q"), required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("build", help="build a disk-resident index over a points file")
    p.add_argument("--points", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--block-size", type=int, default=1024)
    p.add_argument("--cache", type=int, default=_cache_default())
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="run a skyline query over built indexes")
    p.add_argument("--data", required=True)
    p.add_argument("--query", action="append", required=True)
    p.add_argument("--engine", choices=("bbs", "n2s2"), default="n2s2")
    p.add_argument("--priority", choices=("lower-bound", "improved"),
                   default="improved")
    p.add_argument("--block-size", type=int, default=1024)
    p.add_argument("--cache", type=int, default=_cache_default())
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("verify", help="cross-check both engines against the oracle")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=_positive("--n"), default=2000)
    p.add_argument("--m", type=_positive("--m"), default=2)
    p.add_argument("--q", type=_positive("--q"), default=1000)
    p.add_argument("--trials", type=_positive("--trials"), default=50)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="run a benchmark sweep")
    p.add_argument("--phase", choices=bench.PHASES, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scale", choices=("desk", "paper"), default="desk")
    p.add_argument("--seeds", type=_positive("--seeds"), default=None)
    p.add_argument("--values", type=int, nargs="+", default=None)
    p.add_argument("--n", type=_positive("--n"), default=None)
    p.add_argument("--q", type=_positive("--q"), default=None)
    p.add_argument("--m", type=_positive("--m"), default=None)
    p.add_argument("--cache", type=int, default=_cache_default())
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except StorageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except VerificationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NnskyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint():
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
