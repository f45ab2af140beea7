"""Brute-force ground truth: linear-scan NN distances and all-pairs skyline.

Deliberately index-free and cache-free so it shares no machinery with the
engines beyond the distance function and the dominance predicate.
"""

import math
from dataclasses import dataclass

from .errors import UsageError
from .skyline import dominates


@dataclass
class OracleResult:
    attrs: dict  # point id -> attribute tuple
    skyline_ids: set


def oracle_attrs(points, query_sets) -> dict:
    """Exact NN-distance tuples by full linear scan over every query set."""
    if not query_sets:
        raise UsageError("at least one query set is required")
    sets = [[q.coords for q in qs] for qs in query_sets]
    for qs in sets:
        if not qs:
            raise UsageError("query sets must be non-empty")
    dist = math.dist
    attrs = {}
    for p in points:
        pc = p.coords
        attrs[p.id] = tuple(min(dist(pc, qc) for qc in qs) for qs in sets)
    return attrs


def oracle_skyline(attrs: dict, dominance=None) -> set:
    """Ids of tuples not dominated by any other tuple.

    With the default predicate, a dominator always has a strictly smaller
    attribute sum, so only earlier tuples in sum order need checking. A
    custom ``dominance`` falls back to the full all-pairs scan.
    """
    items = sorted(attrs.items(), key=lambda kv: (sum(kv[1]), kv[0]))
    out = set()
    if dominance is None:
        for idx, (pid, t) in enumerate(items):
            if not any(dominates(items[j][1], t) for j in range(idx)):
                out.add(pid)
    else:
        for pid, t in items:
            if not any(dominance(u, t) for qid, u in items if qid != pid):
                out.add(pid)
    return out


def oracle_run(points, query_sets) -> OracleResult:
    attrs = oracle_attrs(points, query_sets)
    return OracleResult(attrs=attrs, skyline_ids=oracle_skyline(attrs))
