import random

import numpy as np
import pytest

from nnsky.geometry import Mbr, Point
from nnsky.rstar import bulk_build
from nnsky.storage import BlockStore, StoreConfig


def build_tree(points, path, block_size=1024, cache_blocks=512):
    """Build a persisted tree; caller owns the returned store."""
    store = BlockStore(path, StoreConfig(block_size, cache_blocks))
    tree = bulk_build(points, store)
    return tree, store


def rand_points(rng, n, d=2, lo=0.0, hi=1.0, id0=0):
    return [
        Point(id0 + i, tuple(rng.uniform(lo, hi) for _ in range(d)))
        for i in range(n)
    ]


def rand_mbr(rng, d=2, max_side=1.0, span=4.0):
    lo = [rng.uniform(-span, span) for _ in range(d)]
    hi = [l + rng.uniform(0.0, max_side) for l in lo]
    return Mbr(lo, hi)


@pytest.fixture
def rng():
    return random.Random(20260826)


@pytest.fixture
def nprng():
    return np.random.default_rng(20260826)
