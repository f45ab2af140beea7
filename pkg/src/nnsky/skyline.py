"""Dominance, exact NN-distance attributes, and the BBS baseline.

The baseline is deliberately naive about query-tree traversal: every lower
bound is recomputed by a fresh best-first descent from the query tree root,
repeating most of the node fetches done for the parent entry. That wasted
work is exactly what the list-carrying algorithm in :mod:`nnsky.n2s2`
avoids, so the baseline must not be "improved".
"""

import heapq
import time
from dataclasses import dataclass, field

from .errors import UsageError
from .geometry import Mbr, Point, min_min_dist
from .storage import IoCounters


def dominates(a, b) -> bool:
    """True iff ``a`` is <= ``b`` on every attribute and < on at least one."""
    if len(a) != len(b):
        raise UsageError("attribute tuples differ in length")
    strict = False
    for x, y in zip(a, b):
        if x > y:
            return False
        if x < y:
            strict = True
    return strict


def min_leaf_dist(mbr: Mbr, tree) -> float:
    """Best-first minimum of MinMindist(mbr, point) over a tree's points.

    Starts at the root on every call. For a degenerate ``mbr`` this is the
    exact nearest-neighbor distance.
    """
    if tree.count == 0:
        raise UsageError("tree is empty")
    heap = [(0.0, 0, False, tree.root_id)]
    seq = 1
    while heap:
        d, _, resolved, payload = heapq.heappop(heap)
        if resolved:
            return d
        node = tree.fetch_node(payload)
        for e in node.entries:
            heapq.heappush(heap, (min_min_dist(mbr, e.mbr), seq, e.is_point, e.id))
            seq += 1
    raise UsageError("tree holds no points")


def nn_distance(p: Point, tree) -> float:
    """Exact distance from ``p`` to its nearest neighbor in the tree."""
    if len(p.coords) != tree.d:
        raise UsageError("point dimensionality disagrees with tree")
    return min_leaf_dist(Mbr.of_point(p.coords), tree)


@dataclass
class RunMetrics:
    io_per_tree: list = field(default_factory=list)  # IoCounters deltas, data tree first
    io_logical: int = 0
    io_physical: int = 0
    heap_insertions: int = 0
    cpu_time_s: float = 0.0
    wall_time_s: float = 0.0


@dataclass
class SkylineResult:
    entries: list  # (Point, attr tuple), sorted by point id
    metrics: RunMetrics


class _MetricsProbe:
    """Snapshots store counters and clocks around one engine run."""

    def __init__(self, stores):
        self.stores = stores
        self.before = [s.counters() for s in stores]
        self.cpu0 = time.thread_time()
        self.wall0 = time.perf_counter()

    def finish(self, heap_insertions) -> RunMetrics:
        cpu = time.thread_time() - self.cpu0
        wall = time.perf_counter() - self.wall0
        deltas = []
        for s, b in zip(self.stores, self.before):
            a = s.counters()
            deltas.append(IoCounters(
                a.logical_fetches - b.logical_fetches,
                a.physical_reads - b.physical_reads,
                a.physical_writes - b.physical_writes,
            ))
        return RunMetrics(
            io_per_tree=deltas,
            io_logical=sum(d.logical_fetches for d in deltas),
            io_physical=sum(d.physical_reads for d in deltas),
            heap_insertions=heap_insertions,
            cpu_time_s=cpu,
            wall_time_s=wall,
        )


def _check_run_args(data, queries):
    if not queries:
        raise UsageError("at least one query tree is required")
    for qt in queries:
        if qt.d != data.d:
            raise UsageError("query tree dimensionality disagrees with data tree")
        if qt.count == 0:
            raise UsageError("query tree is empty")


def bbs_run(data, queries, on_entry=None) -> SkylineResult:
    """Branch-and-bound skyline over NN-distance attributes (the baseline).

    Entry priority is the sum of per-query-set lower bounds; each lower
    bound is found by best-first descent of the query tree from its root.
    ``on_entry(entry, lbs)`` is an optional instrumentation hook invoked
    for every entry pushed on the priority queue.
    """
    _check_run_args(data, queries)
    probe = _MetricsProbe([data.store] + [qt.store for qt in queries])
    heap = []
    seq = 0
    heap_insertions = 0
    skyline = []  # (NodeEntry, attrs)

    def push(entry, lbs):
        nonlocal seq, heap_insertions
        heapq.heappush(heap, (sum(lbs), entry.is_point, entry.id, seq, entry, lbs))
        seq += 1
        heap_insertions += 1
        if on_entry is not None:
            on_entry(entry, lbs)

    root = data.root_entry()
    push(root, tuple(min_leaf_dist(root.mbr, qt) for qt in queries))
    while heap:
        _, _, _, _, entry, lbs = heapq.heappop(heap)
        if any(dominates(attrs, lbs) for _, attrs in skyline):
            continue
        if entry.is_point:
            skyline.append((entry, lbs))
            continue
        node = data.fetch_node(entry.id)
        for e in node.entries:
            elbs = tuple(min_leaf_dist(e.mbr, qt) for qt in queries)
            if any(dominates(attrs, elbs) for _, attrs in skyline):
                continue
            push(e, elbs)

    entries = sorted(
        ((Point(e.id, e.mbr.lo), attrs) for e, attrs in skyline),
        key=lambda pair: pair[0].id,
    )
    return SkylineResult(entries=entries, metrics=probe.finish(heap_insertions))
