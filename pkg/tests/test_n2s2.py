"""Tests for the lockstep search states and the main engine."""

import math
import random

import pytest

from nnsky.bench import build_instance
from nnsky.errors import UsageError
from nnsky.geometry import Mbr, Point, max_max_dist, min_min_dist, union_all
from nnsky.n2s2 import (DsState, ds_dominate, ds_fill, ds_insert, ds_new,
                        ds_priority, ds_reconfig, n2s2_run)
from nnsky.oracle import oracle_run
from nnsky.rstar import NodeEntry
from nnsky.skyline import bbs_run

from conftest import build_tree, rand_mbr, rand_points


def _entry(lo, hi, id=0, is_point=False):
    return NodeEntry(Mbr(lo, hi), id, is_point)


class TestDsState:
    def test_new_is_unbounded(self):
        ds = ds_new(_entry((0, 0), (1, 1)), 2)
        assert ds.m == 2
        assert ds.lists == [[], []]
        assert ds.minminmindist == [math.inf, math.inf]
        assert ds.minmaxmaxdist == [math.inf, math.inf]

    def test_new_rejects_zero_lists(self):
        with pytest.raises(UsageError):
            ds_new(_entry((0, 0), (1, 1)), 0)

    def test_insert_tightens_bounds(self):
        ds = ds_new(_entry((0, 0), (1, 1)), 1)
        ds_insert(ds, _entry((2, 0), (3, 1), id=1), 0)
        assert ds.minminmindist[0] == pytest.approx(1.0)
        assert ds.minmaxmaxdist[0] == pytest.approx(math.sqrt(10.0))
        ds_insert(ds, _entry((1, 0), (1.5, 1), id=2), 0)
        assert ds.minminmindist[0] == pytest.approx(0.0)
        assert ds.minmaxmaxdist[0] == pytest.approx(math.sqrt(3.25))
        assert len(ds.lists[0]) == 2

    def test_insert_bad_index(self):
        ds = ds_new(_entry((0, 0), (1, 1)), 1)
        with pytest.raises(UsageError):
            ds_insert(ds, _entry((2, 0), (3, 1)), 1)

    def test_priority_modes(self):
        ds = ds_new(_entry((0, 0), (1, 1)), 1)
        ds_insert(ds, _entry((2, 0), (2, 1), id=1), 0)
        mm = min_min_dist(ds.owner.mbr, ds.lists[0][0].mbr)
        xx = max_max_dist(ds.owner.mbr, ds.lists[0][0].mbr)
        assert ds_priority(ds, "lower-bound") == pytest.approx(mm)
        assert ds_priority(ds, "improved") == pytest.approx(mm + xx)
        assert ds_priority(ds) == ds_priority(ds, "improved")

    def test_priority_rejects_unfilled(self):
        ds = ds_new(_entry((0, 0), (1, 1)), 1)
        with pytest.raises(UsageError):
            ds_priority(ds)
        with pytest.raises(UsageError):
            ds_priority(ds, "nope")

    def test_dominate(self):
        a = ds_new(_entry((0, 0), (0, 0)), 2)
        b = ds_new(_entry((0, 0), (0, 0)), 2)
        a.minminmindist = [1.0, 2.0]
        b.minminmindist = [2.0, 2.0]
        assert ds_dominate(a, b)
        assert not ds_dominate(b, a)
        b.minminmindist = [1.0, 2.0]
        assert not ds_dominate(a, b)
        c = ds_new(_entry((0, 0), (0, 0)), 1)
        with pytest.raises(UsageError):
            ds_dominate(a, c)

    def test_reconfig_matches_predicate(self, rng):
        for _ in range(50):
            ds = ds_new(NodeEntry(rand_mbr(rng), 0, False), 1)
            for j in range(rng.randint(1, 12)):
                ds_insert(ds, NodeEntry(rand_mbr(rng), j + 1, False), 0)
            bound = ds.minmaxmaxdist[0]
            want = [e for e in ds.lists[0]
                    if min_min_dist(ds.owner.mbr, e.mbr) <= bound]
            ds_reconfig(ds, 0)
            assert ds.lists[0] == want
            assert ds.lists[0], "the bound witness always survives"


class TestDsFill:
    def _root_ds(self, owner, qtrees):
        ds = ds_new(owner, len(qtrees))
        for i, qt in enumerate(qtrees):
            root = qt.fetch_node(qt.root_id)
            mbr = union_all(e.mbr for e in root.entries)
            ds_insert(ds, NodeEntry(mbr, qt.root_id, False), i)
        return ds

    def test_point_owner_descends_to_exact_nn(self, tmp_path, rng):
        qpts = rand_points(rng, 300)
        qt, store = build_tree(qpts, tmp_path / "q.idx")
        parent = self._root_ds(_entry((0, 0), (1, 1)), [qt])
        for k in range(20):
            p = (rng.random(), rng.random())
            child = ds_new(NodeEntry(Mbr.of_point(p), k, True), 1)
            ds_fill(child, parent, 0, qt)
            want = min(math.dist(p, q.coords) for q in qpts)
            assert child.minminmindist[0] == pytest.approx(want, abs=1e-12)
            assert all(e.is_point for e in child.lists[0])
        store.close()

    def test_prune_keeps_exact_nn(self, tmp_path, rng):
        qpts = rand_points(rng, 300)
        qt, store = build_tree(qpts, tmp_path / "q.idx")
        parent = self._root_ds(_entry((0, 0), (1, 1)), [qt])
        for k in range(20):
            p = (rng.random(), rng.random())
            pruned = ds_new(NodeEntry(Mbr.of_point(p), k, True), 1)
            full = ds_new(NodeEntry(Mbr.of_point(p), k, True), 1)
            ds_fill(pruned, parent, 0, qt, prune=True)
            ds_fill(full, parent, 0, qt, prune=False)
            assert pruned.minminmindist[0] == full.minminmindist[0]
            assert len(pruned.lists[0]) <= len(full.lists[0])
        store.close()


def _run_instance(data_pts, query_sets, tmp_path, fn, **kw):
    tmp_path.mkdir(parents=True, exist_ok=True)
    data_tree, query_trees, stores = build_instance(data_pts, query_sets, tmp_path)
    try:
        return fn(data_tree, query_trees, **kw)
    finally:
        for s in stores:
            s.close()


class TestN2s2Run:
    def test_five_point_instance(self, tmp_path):
        data = [Point(0, (0.0, 0.0)), Point(1, (1.0, 1.0)), Point(2, (2.0, 2.0)),
                Point(3, (0.2, 0.9)), Point(4, (0.9, 0.1))]
        queries = [[Point(0, (0.0, 0.0))], [Point(0, (2.0, 2.0))]]
        res = _run_instance(data, queries, tmp_path, n2s2_run)
        assert [p.id for p, _ in res.entries] == [0, 1, 2, 3, 4]
        by_id = {p.id: attrs for p, attrs in res.entries}
        assert by_id[1] == pytest.approx((math.sqrt(2.0), math.sqrt(2.0)))

    @pytest.mark.parametrize("priority", ["improved", "lower-bound"])
    @pytest.mark.parametrize("seed", range(4))
    def test_matches_oracle(self, tmp_path, seed, priority):
        rng = random.Random(seed)
        data = rand_points(rng, 150)
        queries = [rand_points(rng, 40) for _ in range(2)]
        res = _run_instance(data, queries, tmp_path, n2s2_run, priority=priority)
        want = oracle_run(data, queries)
        assert {p.id for p, _ in res.entries} == want.skyline_ids
        for p, attrs in res.entries:
            assert attrs == pytest.approx(want.attrs[p.id], abs=1e-9)

    def test_three_query_sets(self, tmp_path, rng):
        data = rand_points(rng, 120)
        queries = [rand_points(rng, 30) for _ in range(3)]
        res = _run_instance(data, queries, tmp_path, n2s2_run)
        want = oracle_run(data, queries)
        assert {p.id for p, _ in res.entries} == want.skyline_ids

    @pytest.mark.parametrize("seed", range(6))
    def test_prune_invisible_in_results(self, tmp_path, seed):
        rng = random.Random(100 + seed)
        data = rand_points(rng, 120)
        queries = [rand_points(rng, 30) for _ in range(2)]
        on = _run_instance(data, queries, tmp_path / "on", n2s2_run, prune=True)
        off = _run_instance(data, queries, tmp_path / "off", n2s2_run, prune=False)
        assert [(p.id, attrs) for p, attrs in on.entries] == \
               [(p.id, attrs) for p, attrs in off.entries]

    def test_matches_baseline(self, tmp_path, rng):
        data = rand_points(rng, 200)
        queries = [rand_points(rng, 60) for _ in range(2)]
        a = _run_instance(data, queries, tmp_path / "a", n2s2_run)
        b = _run_instance(data, queries, tmp_path / "b", bbs_run)
        assert [p.id for p, _ in a.entries] == [p.id for p, _ in b.entries]
        for (_, x), (_, y) in zip(a.entries, b.entries):
            assert x == pytest.approx(y, abs=1e-9)

    def test_descent_tightens_bounds(self, tmp_path):
        # a child state's lower bounds never shrink and its upper bounds
        # never grow relative to its parent's
        for seed in range(5):
            rng = random.Random(300 + seed)
            data = rand_points(rng, 150)
            queries = [rand_points(rng, 40) for _ in range(2)]
            pairs = []

            def hook(ds, parent):
                if parent is not None:
                    pairs.append((list(parent.minminmindist),
                                  list(parent.minmaxmaxdist),
                                  list(ds.minminmindist),
                                  list(ds.minmaxmaxdist)))

            _run_instance(data, queries, tmp_path / str(seed), n2s2_run,
                          on_ds=hook)
            assert pairs
            for pmm, pxx, cmm, cxx in pairs:
                for i in range(len(pmm)):
                    assert cmm[i] >= pmm[i] - 1e-9
                    assert cxx[i] <= pxx[i] + 1e-9

    def test_lower_bounds_sound(self, tmp_path):
        # minminmindist[i] never exceeds the true attribute of any data
        # point inside the owner's box
        for seed in range(5):
            rng = random.Random(400 + seed)
            data = rand_points(rng, 150)
            queries = [rand_points(rng, 40) for _ in range(2)]
            want = oracle_run(data, queries)
            states = []
            _run_instance(data, queries, tmp_path / str(seed), n2s2_run,
                          on_ds=lambda ds, parent: states.append(ds))
            by_id = {p.id: p for p in data}
            for ds in states:
                if ds.owner.is_point:
                    inside = [by_id[ds.owner.id]]
                else:
                    inside = [p for p in data
                              if ds.owner.mbr.contains(Mbr.of_point(p.coords))]
                for i, mm in enumerate(ds.minminmindist):
                    floor = min(want.attrs[p.id][i] for p in inside)
                    assert mm <= floor + 1e-9

    def test_deterministic(self, tmp_path, rng):
        data = rand_points(rng, 150)
        queries = [rand_points(rng, 40) for _ in range(2)]
        a = _run_instance(data, queries, tmp_path / "a", n2s2_run)
        b = _run_instance(data, queries, tmp_path / "b", n2s2_run)
        assert [(p.id, attrs) for p, attrs in a.entries] == \
               [(p.id, attrs) for p, attrs in b.entries]
        assert a.metrics.heap_insertions == b.metrics.heap_insertions
        assert a.metrics.io_logical == b.metrics.io_logical

    def test_cheaper_than_baseline(self, tmp_path, rng):
        data = rand_points(rng, 800)
        queries = [rand_points(rng, 300) for _ in range(2)]
        a = _run_instance(data, queries, tmp_path / "a", n2s2_run)
        b = _run_instance(data, queries, tmp_path / "b", bbs_run)
        assert a.metrics.io_logical < b.metrics.io_logical
        assert a.metrics.heap_insertions < b.metrics.heap_insertions
