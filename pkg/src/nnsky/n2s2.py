"""Lockstep branch-and-bound skyline with per-node candidate lists.

Each data-tree entry under consideration owns a search state (``DsState``)
holding, per query set, the query-tree nodes still able to contain the
owner's nearest neighbor, together with two bounds over that list: the
minimum MinMindist and the minimum MaxMaxdist to the owner. Descending one
level of the data tree descends the candidate lists one level too, pruning
every candidate whose closest approach already exceeds the best worst-case
distance. The default priority sums both bounds over all lists; it orders
the queue better than the plain lower bound but is no longer optimistic,
so a freshly popped point must repair the skyline list by evicting entries
it dominates.
"""

import heapq
import math

from .errors import UsageError
from .geometry import Point, max_max_dist, min_min_dist, union_all
from .rstar import NodeEntry
from .skyline import SkylineResult, _check_run_args, _MetricsProbe

INF = math.inf

PRIORITY_MODES = ("improved", "lower-bound")


class DsState:
    """Search state of one data-tree entry: owner, m candidate lists, bounds."""

    __slots__ = ("owner", "lists", "minminmindist", "minmaxmaxdist")

    def __init__(self, owner, lists, minminmindist, minmaxmaxdist):
        self.owner = owner
        self.lists = lists
        self.minminmindist = minminmindist
        self.minmaxmaxdist = minmaxmaxdist

    @property
    def m(self):
        return len(self.lists)


def ds_new(owner: NodeEntry, m: int) -> DsState:
    if m < 1:
        raise UsageError("m must be at least 1")
    return DsState(owner, [[] for _ in range(m)], [INF] * m, [INF] * m)


def ds_insert(ds: DsState, entry: NodeEntry, i: int):
    """Append a candidate to list ``i`` and tighten both bounds."""
    if not 0 <= i < ds.m:
        raise UsageError(f"list index {i} out of range")
    ds.lists[i].append(entry)
    mm = min_min_dist(ds.owner.mbr, entry.mbr)
    if mm < ds.minminmindist[i]:
        ds.minminmindist[i] = mm
    xx = max_max_dist(ds.owner.mbr, entry.mbr)
    if xx < ds.minmaxmaxdist[i]:
        ds.minmaxmaxdist[i] = xx


def ds_priority(ds: DsState, mode: str = "improved") -> float:
    """Queue priority; lower is more promising.

    "improved" sums both bounds per list (not a lower bound of the attribute
    sum); "lower-bound" sums only the MinMindist bounds.
    """
    if mode not in PRIORITY_MODES:
        raise UsageError(f"unknown priority mode {mode!r}")
    if any(v == INF for v in ds.minminmindist):
        raise UsageError("priority of a DS with an unfilled list")
    if mode == "lower-bound":
        return sum(ds.minminmindist)
    return sum(ds.minminmindist) + sum(ds.minmaxmaxdist)


def ds_dominate(p: DsState, q: DsState) -> bool:
    """True iff p's MinMindist bounds dominate q's (<= everywhere, < once)."""
    if p.m != q.m:
        raise UsageError("DS states differ in list count")
    strict = False
    for a, b in zip(p.minminmindist, q.minminmindist):
        if a > b:
            return False
        if a < b:
            strict = True
    return strict


def ds_reconfig(ds: DsState, i: int):
    """Drop candidates whose MinMindist exceeds the list's MaxMaxdist bound."""
    if not 0 <= i < ds.m:
        raise UsageError(f"list index {i} out of range")
    bound = ds.minmaxmaxdist[i]
    owner = ds.owner.mbr
    ds.lists[i] = [e for e in ds.lists[i] if min_min_dist(owner, e.mbr) <= bound]


def ds_fill(child: DsState, parent: DsState, i: int, qtree, prune: bool = True):
    """Rebuild list ``i`` of ``child`` one query-tree level below ``parent``'s.

    Point-level candidates are carried over unchanged; intermediate ones are
    fetched and replaced by their entries, skipping an entry when its closest
    approach already exceeds the running MaxMaxdist bound. A point owner
    keeps descending until the list holds only points, at which moment
    minminmindist[i] is the exact NN distance.
    """
    src = parent.lists[i]
    assert src, "fill from an empty candidate list"
    child.lists[i] = []
    child.minminmindist[i] = INF
    child.minmaxmaxdist[i] = INF
    owner = child.owner.mbr
    if src[0].is_point:
        for e in src:
            ds_insert(child, e, i)
    else:
        for e in src:
            node = qtree.fetch_node(e.id)
            for sub in node.entries:
                if prune and min_min_dist(owner, sub.mbr) > child.minmaxmaxdist[i]:
                    continue
                ds_insert(child, sub, i)
    if prune:
        ds_reconfig(child, i)
    if child.owner.is_point:
        while not child.lists[i][0].is_point:
            ds_fill(child, child, i, qtree, prune)


class _ExpansionCache:
    """Decoded-node memo for one expansion.

    The candidate lists of a popped state are shared by all of its children,
    so each listed query node is fetched once per expansion, not once per
    child; that sharing is what saves the repeated fetches the baseline pays.
    """

    __slots__ = ("tree", "nodes")

    def __init__(self, tree):
        self.tree = tree
        self.nodes = {}

    def fetch_node(self, block_id):
        node = self.nodes.get(block_id)
        if node is None:
            node = self.tree.fetch_node(block_id)
            self.nodes[block_id] = node
        return node


def n2s2_run(data, queries, priority: str = "improved", prune: bool = True,
             on_ds=None) -> SkylineResult:
    """Run the lockstep skyline search over a data tree and m query trees.

    ``on_ds(ds, parent)`` is an optional instrumentation hook invoked for
    every search state created (parent is None for the root state).
    ``prune=False`` disables both the fill-time skip and the reconfigure
    filter; results must be identical either way.
    """
    if priority not in PRIORITY_MODES:
        raise UsageError(f"unknown priority mode {priority!r}")
    _check_run_args(data, queries)
    probe = _MetricsProbe([data.store] + [qt.store for qt in queries])
    m = len(queries)
    heap = []
    seq = 0
    heap_insertions = 0
    skyline = []  # DsState with point owners, exact bounds

    def push(ds):
        nonlocal seq, heap_insertions
        heapq.heappush(heap, (ds_priority(ds, priority), ds.owner.is_point,
                              ds.owner.id, seq, ds))
        seq += 1
        heap_insertions += 1

    root_node = data.fetch_node(data.root_id)
    root_owner = NodeEntry(union_all(e.mbr for e in root_node.entries),
                           data.root_id, False)
    ds_root = ds_new(root_owner, m)
    for i, qt in enumerate(queries):
        qroot = qt.fetch_node(qt.root_id)
        qmbr = union_all(e.mbr for e in qroot.entries)
        ds_insert(ds_root, NodeEntry(qmbr, qt.root_id, False), i)
    if on_ds is not None:
        on_ds(ds_root, None)
    push(ds_root)

    while heap:
        _, _, _, _, ds = heapq.heappop(heap)
        if any(ds_dominate(s, ds) for s in skyline):
            continue
        if ds.owner.is_point:
            # the improved priority is not optimistic: evict entries the
            # freshly resolved point dominates
            skyline = [s for s in skyline if not ds_dominate(ds, s)]
            skyline.append(ds)
            continue
        node = data.fetch_node(ds.owner.id)
        sources = [_ExpansionCache(qt) for qt in queries]
        for e in node.entries:
            dse = ds_new(e, m)
            for i in range(m):
                ds_fill(dse, ds, i, sources[i], prune)
            if on_ds is not None:
                on_ds(dse, ds)
            if any(ds_dominate(s, dse) for s in skyline):
                continue
            push(dse)

    entries = sorted(
        ((Point(s.owner.id, s.owner.mbr.lo), tuple(s.minminmindist)) for s in skyline),
        key=lambda pair: pair[0].id,
    )
    return SkylineResult(entries=entries, metrics=probe.finish(heap_insertions))
