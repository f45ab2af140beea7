"""Points, axis-aligned bounding rectangles and the MBR distance metrics.

Two inter-rectangle metrics drive all pruning in the engines: the smallest
possible distance between any pair of points drawn from two rectangles
(``min_min_dist``) and the largest possible one (``max_max_dist``).
"""

import math
from dataclasses import dataclass

from .errors import UsageError


@dataclass(frozen=True)
class Point:
    """An identified location in d-dimensional Euclidean space (d >= 2)."""

    id: int
    coords: tuple

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        object.__setattr__(self, "coords", coords)
        if self.id < 0:
            raise UsageError("point id must be non-negative")
        if len(coords) < 2:
            raise UsageError("points need at least two coordinates")
        if not all(math.isfinite(c) for c in coords):
            raise UsageError("point coordinates must be finite")


class Mbr:
    """Axis-aligned minimum bounding rectangle; a point's MBR has lo == hi."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi):
        lo = tuple(float(v) for v in lo)
        hi = tuple(float(v) for v in hi)
        if len(lo) != len(hi):
            raise UsageError("lo and hi must have the same dimensionality")
        if not lo:
            raise UsageError("empty rectangle")
        for l, h in zip(lo, hi):
            if not (math.isfinite(l) and math.isfinite(h)):
                raise UsageError("rectangle bounds must be finite")
            if l > h:
                raise UsageError("lo must not exceed hi on any axis")
        self.lo = lo
        self.hi = hi

    @classmethod
    def of_point(cls, coords):
        return cls(coords, coords)

    @classmethod
    def _unchecked(cls, lo, hi):
        # fast path for decoding trusted on-disk nodes
        m = object.__new__(cls)
        m.lo = lo
        m.hi = hi
        return m

    @property
    def d(self):
        return len(self.lo)

    def union(self, other):
        return Mbr._unchecked(
            tuple(map(min, self.lo, other.lo)),
            tuple(map(max, self.hi, other.hi)),
        )

    def contains(self, other):
        return all(sl <= ol for sl, ol in zip(self.lo, other.lo)) and all(
            sh >= oh for sh, oh in zip(self.hi, other.hi)
        )

    def center(self):
        return tuple((l + h) / 2.0 for l, h in zip(self.lo, self.hi))

    def __eq__(self, other):
        if not isinstance(other, Mbr):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __repr__(self):
        return f"Mbr({self.lo}, {self.hi})"


def union_all(mbrs):
    """Union of a non-empty iterable of rectangles."""
    it = iter(mbrs)
    try:
        acc = next(it)
    except StopIteration:
        raise UsageError("union of no rectangles") from None
    for m in it:
        acc = acc.union(m)
    return acc


def _check_dims(da, db):
    if da != db:
        raise UsageError(f"dimension mismatch: {da} vs {db}")


def point_dist(p: Point, q: Point) -> float:
    """Euclidean distance between two points."""
    _check_dims(len(p.coords), len(q.coords))
    return math.dist(p.coords, q.coords)


def min_min_dist(a: Mbr, b: Mbr) -> float:
    """Minimum distance between any point of ``a`` and any point of ``b``.

    Zero iff the rectangles intersect or touch.
    """
    _check_dims(len(a.lo), len(b.lo))
    gaps = []
    for al, ah, bl, bh in zip(a.lo, a.hi, b.lo, b.hi):
        if al > bh:
            gaps.append(al - bh)
        elif bl > ah:
            gaps.append(bl - ah)
        else:
            gaps.append(0.0)
    return math.hypot(*gaps)


def max_max_dist(a: Mbr, b: Mbr) -> float:
    """Maximum distance between any point of ``a`` and any point of ``b``."""
    _check_dims(len(a.lo), len(b.lo))
    spreads = [
        max(abs(al - bh), abs(ah - bl))
        for al, ah, bl, bh in zip(a.lo, a.hi, b.lo, b.hi)
    ]
    return math.hypot(*spreads)


def min_dist_point_mbr(p: Point, b: Mbr) -> float:
    """Distance from a point to the nearest point of a rectangle."""
    _check_dims(len(p.coords), len(b.lo))
    gaps = []
    for c, bl, bh in zip(p.coords, b.lo, b.hi):
        if c < bl:
            gaps.append(bl - c)
        elif c > bh:
            gaps.append(c - bh)
        else:
            gaps.append(0.0)
    return math.hypot(*gaps)
