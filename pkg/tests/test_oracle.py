"""Tests for the brute-force reference implementation itself."""

import math
import random

import pytest

from nnsky.errors import UsageError
from nnsky.geometry import Point
from nnsky.oracle import oracle_attrs, oracle_run, oracle_skyline

from conftest import rand_points


class TestOracleAttrs:
    def test_single_pair(self):
        attrs = oracle_attrs([Point(0, (0.0, 0.0))], [[Point(0, (3.0, 4.0))]])
        assert attrs == {0: (5.0,)}

    def test_nearest_of_several(self):
        qs = [Point(0, (10.0, 0.0)), Point(1, (1.0, 0.0)), Point(2, (0.0, 2.0))]
        attrs = oracle_attrs([Point(7, (0.0, 0.0))], [qs])
        assert attrs == {7: (1.0,)}

    def test_one_tuple_entry_per_query_set(self):
        data = [Point(0, (0.5, 0.5))]
        queries = [[Point(0, (0.0, 0.0))], [Point(0, (1.0, 1.0))],
                   [Point(0, (0.5, 0.5))]]
        attrs = oracle_attrs(data, queries)
        assert attrs[0] == pytest.approx((math.sqrt(0.5), math.sqrt(0.5), 0.0))

    def test_rejects_empty(self):
        with pytest.raises(UsageError):
            oracle_attrs([Point(0, (0.0, 0.0))], [])
        with pytest.raises(UsageError):
            oracle_attrs([Point(0, (0.0, 0.0))], [[]])


class TestOracleSkyline:
    def test_single(self):
        assert oracle_skyline({5: (1.0, 2.0)}) == {5}

    def test_chain(self):
        attrs = {0: (1.0, 1.0), 1: (2.0, 2.0), 2: (3.0, 3.0)}
        assert oracle_skyline(attrs) == {0}

    def test_antichain(self):
        attrs = {0: (1.0, 3.0), 1: (2.0, 2.0), 2: (3.0, 1.0)}
        assert oracle_skyline(attrs) == {0, 1, 2}

    def test_duplicates_both_kept(self):
        attrs = {0: (1.0, 1.0), 1: (1.0, 1.0)}
        assert oracle_skyline(attrs) == {0, 1}

    def test_minimality_and_closure(self, rng):
        # every excluded tuple has a dominator in the skyline; no skyline
        # member dominates another
        from nnsky.skyline import dominates
        for _ in range(30):
            attrs = {i: (rng.uniform(0, 1), rng.uniform(0, 1))
                     for i in range(40)}
            sky = oracle_skyline(attrs)
            for i, t in attrs.items():
                if i in sky:
                    assert not any(dominates(attrs[j], t) for j in attrs if j != i)
                else:
                    assert any(dominates(attrs[j], t) for j in sky)

    def test_custom_dominance(self):
        attrs = {0: (1.0, 1.0), 1: (2.0, 2.0)}
        flipped = oracle_skyline(attrs, dominance=lambda a, b:
                                 all(x >= y for x, y in zip(a, b)) and a != b)
        assert flipped == {1}

    def test_idempotent(self, rng):
        attrs = {i: (rng.uniform(0, 1), rng.uniform(0, 1)) for i in range(60)}
        sky = oracle_skyline(attrs)
        again = oracle_skyline({i: attrs[i] for i in sky})
        assert again == sky


class TestOracleRun:
    def test_five_point_instance(self):
        data = [Point(0, (0.0, 0.0)), Point(1, (1.0, 1.0)), Point(2, (2.0, 2.0)),
                Point(3, (0.2, 0.9)), Point(4, (0.9, 0.1))]
        queries = [[Point(0, (0.0, 0.0))], [Point(0, (2.0, 2.0))]]
        res = oracle_run(data, queries)
        assert res.skyline_ids == {0, 1, 2, 3, 4}
        assert res.attrs[0] == pytest.approx((0.0, math.sqrt(8.0)))

    def test_translation_invariant_ids(self, rng):
        data = rand_points(rng, 80)
        queries = [rand_points(rng, 20) for _ in range(2)]
        a = oracle_run(data, queries)
        dx, dy = 5.0, -3.0
        data2 = [Point(p.id, (p.coords[0] + dx, p.coords[1] + dy)) for p in data]
        queries2 = [[Point(q.id, (q.coords[0] + dx, q.coords[1] + dy)) for q in qs]
                    for qs in queries]
        b = oracle_run(data2, queries2)
        assert a.skyline_ids == b.skyline_ids
        for i in a.attrs:
            assert a.attrs[i] == pytest.approx(b.attrs[i], abs=1e-9)
