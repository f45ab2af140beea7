"""Disk-resident R*-tree over a point set.

Trees are built by repeated insertion with the classic R* heuristics:
choose-subtree by overlap/area enlargement, forced reinsertion of the
entries farthest from the node center on the first overflow per level,
and margin/overlap-driven splits. The build runs in memory and is flushed
to a block store at the end; after that the tree is read-only and every
node access goes through the store (and is counted by it).

Node block layout (little-endian): level u16, entry count u16, 12 reserved
bytes, then per entry 2*d f64 (lo coords, hi coords) and a u64 id that is a
child block id for intermediate nodes or a point id for leaves. Block 0 of
the store holds tree metadata.
"""

import math
import struct
from collections import deque

from .errors import FormatError, UsageError
from .geometry import Mbr, Point, union_all
from .storage import BlockStore

NODE_HEADER = struct.Struct("<HH12x")
META = struct.Struct("<8sQQQII")
META_MAGIC = b"NNSKYTRE"


class TreeConfig:
    """Fanout parameters derived from the block size and dimensionality."""

    __slots__ = ("block_size", "d", "max_fanout", "min_fanout",
                 "reinsert_fraction", "reinsert_count")

    def __init__(self, block_size=1024, d=2, reinsert_fraction=0.30):
        self.block_size = block_size
        self.d = d
        self.max_fanout = (block_size - NODE_HEADER.size) // (16 * d + 8)
        self.min_fanout = math.ceil(0.4 * self.max_fanout)
        if not 2 <= self.min_fanout <= self.max_fanout / 2:
            raise UsageError(
                f"block_size {block_size} with d={d} yields unusable fanout "
                f"[{self.min_fanout}, {self.max_fanout}]"
            )
        self.reinsert_fraction = reinsert_fraction
        self.reinsert_count = max(1, int(reinsert_fraction * self.max_fanout))


class NodeEntry:
    """One slot of a tree node: an MBR plus a child block id or point id."""

    __slots__ = ("mbr", "id", "is_point")

    def __init__(self, mbr, id, is_point):
        self.mbr = mbr
        self.id = id
        self.is_point = is_point

    def __eq__(self, other):
        if not isinstance(other, NodeEntry):
            return NotImplemented
        return (self.mbr, self.id, self.is_point) == (other.mbr, other.id, other.is_point)

    def __repr__(self):
        kind = "pt" if self.is_point else "node"
        return f"NodeEntry({self.mbr!r}, {kind}={self.id})"


class RTreeNode:
    __slots__ = ("level", "entries")

    def __init__(self, level, entries):
        self.level = level
        self.entries = entries

    def __eq__(self, other):
        if not isinstance(other, RTreeNode):
            return NotImplemented
        return self.level == other.level and self.entries == other.entries


def _entry_struct(d):
    return struct.Struct("<%ddQ" % (2 * d))


def encode_node(node: RTreeNode, config: TreeConfig) -> bytes:
    if len(node.entries) > config.max_fanout:
        raise UsageError("node exceeds max fanout")
    es = _entry_struct(config.d)
    buf = bytearray(config.block_size)
    NODE_HEADER.pack_into(buf, 0, node.level, len(node.entries))
    off = NODE_HEADER.size
    for e in node.entries:
        es.pack_into(buf, off, *e.mbr.lo, *e.mbr.hi, e.id)
        off += es.size
    return bytes(buf)


def decode_node(block: bytes, config: TreeConfig) -> RTreeNode:
    if len(block) != config.block_size:
        raise FormatError("block has wrong length")
    level, count = NODE_HEADER.unpack_from(block, 0)
    if count > config.max_fanout:
        raise FormatError(f"node entry count {count} exceeds fanout {config.max_fanout}")
    es = _entry_struct(config.d)
    d = config.d
    is_point = level == 0
    entries = []
    off = NODE_HEADER.size
    for _ in range(count):
        vals = es.unpack_from(block, off)
        off += es.size
        mbr = Mbr._unchecked(vals[:d], vals[d:2 * d])
        entries.append(NodeEntry(mbr, vals[2 * d], is_point))
    return RTreeNode(level, entries)


# ---------------------------------------------------------------------------
# build phase: in-memory nodes over raw (lo, hi) tuples for speed


def _union2(lo1, hi1, lo2, hi2):
    return tuple(map(min, lo1, lo2)), tuple(map(max, hi1, hi2))


def _area(lo, hi):
    a = 1.0
    for l, h in zip(lo, hi):
        a *= h - l
    return a


def _margin(lo, hi):
    return sum(h - l for l, h in zip(lo, hi))


def _overlap(lo1, hi1, lo2, hi2):
    a = 1.0
    for l1, h1, l2, h2 in zip(lo1, hi1, lo2, hi2):
        w = min(h1, h2) - max(l1, l2)
        if w <= 0.0:
            return 0.0
        a *= w
    return a


def _union_of(entries):
    lo = entries[0].lo
    hi = entries[0].hi
    for e in entries[1:]:
        lo, hi = _union2(lo, hi, e.lo, e.hi)
    return lo, hi


class _MemEntry:
    __slots__ = ("lo", "hi", "child")

    def __init__(self, lo, hi, child):
        self.lo = lo
        self.hi = hi
        self.child = child  # _MemNode, or point id at leaf level


class _MemNode:
    __slots__ = ("level", "entries")

    def __init__(self, level, entries):
        self.level = level
        self.entries = entries


class RTreeBuilder:
    """Incremental R* build; call :meth:`finish` to persist into a store."""

    def __init__(self, d=2, block_size=1024, config=None):
        self.config = config or TreeConfig(block_size=block_size, d=d)
        if self.config.d != d:
            raise UsageError("config dimensionality disagrees with d")
        self.d = d
        self.root = _MemNode(0, [])
        self._ids = set()
        self.stats = {"splits": 0, "reinserts": 0}
        self._pending = deque()
        self._reinserted_levels = set()

    @property
    def count(self):
        return len(self._ids)

    @property
    def height(self):
        return self.root.level + 1

    def insert(self, point: Point):
        if len(point.coords) != self.d:
            raise UsageError("point dimensionality disagrees with tree")
        if point.id in self._ids:
            raise UsageError(f"duplicate point id {point.id}")
        self._ids.add(point.id)
        self._reinserted_levels = set()
        self._pending.append((_MemEntry(point.coords, point.coords, point.id), 0))
        while self._pending:
            entry, level = self._pending.popleft()
            self._insert_at(entry, level)

    def _insert_at(self, entry, level):
        split = self._insert_rec(self.root, entry, level)
        if split is not None:
            lo, hi = _union_of(self.root.entries)
            old = _MemEntry(lo, hi, self.root)
            self.root = _MemNode(self.root.level + 1, [old, split])

    def _insert_rec(self, node, entry, level):
        if node.level == level:
            node.entries.append(entry)
        else:
            idx = self._choose_subtree(node, entry)
            ce = node.entries[idx]
            split = self._insert_rec(ce.child, entry, level)
            ce.lo, ce.hi = _union_of(ce.child.entries)
            if split is not None:
                node.entries.append(split)
        if len(node.entries) > self.config.max_fanout:
            return self._overflow(node)
        return None

    def _choose_subtree(self, node, entry):
        best = None
        best_key = None
        entries = node.entries
        if node.level == 1:
            # children are leaves: minimize overlap enlargement
            for k, e in enumerate(entries):
                nlo, nhi = _union2(e.lo, e.hi, entry.lo, entry.hi)
                ovl_delta = 0.0
                for j, o in enumerate(entries):
                    if j == k:
                        continue
                    ovl_delta += _overlap(nlo, nhi, o.lo, o.hi) - _overlap(e.lo, e.hi, o.lo, o.hi)
                area = _area(e.lo, e.hi)
                key = (ovl_delta, _area(nlo, nhi) - area, area, k)
                if best_key is None or key < best_key:
                    best_key = key
                    best = k
        else:
            for k, e in enumerate(entries):
                nlo, nhi = _union2(e.lo, e.hi, entry.lo, entry.hi)
                area = _area(e.lo, e.hi)
                key = (_area(nlo, nhi) - area, area, k)
                if best_key is None or key < best_key:
                    best_key = key
                    best = k
        return best

    def _overflow(self, node):
        if node is not self.root and node.level not in self._reinserted_levels:
            self._reinserted_levels.add(node.level)
            self._force_reinsert(node)
            return None
        self.stats["splits"] += 1
        return self._split(node)

    def _force_reinsert(self, node):
        self.stats["reinserts"] += 1
        lo, hi = _union_of(node.entries)
        cx = tuple((l + h) / 2.0 for l, h in zip(lo, hi))
        entries = node.entries

        def center_dist(e):
            return math.dist(cx, tuple((l + h) / 2.0 for l, h in zip(e.lo, e.hi)))

        order = sorted(range(len(entries)), key=lambda i: -center_dist(entries[i]))
        p = self.config.reinsert_count
        removed = order[:p]
        removed_set = set(removed)
        node.entries = [e for i, e in enumerate(entries) if i not in removed_set]
        # close reinsert: re-enter the removed entries nearest-first
        for i in reversed(removed):
            self._pending.append((entries[i], node.level))

    def _split(self, node):
        M = self.config.max_fanout
        m = self.config.min_fanout
        entries = node.entries
        nk = M - 2 * m + 2

        def sortings(axis):
            yield sorted(entries, key=lambda e: (e.lo[axis], e.hi[axis]))
            yield sorted(entries, key=lambda e: (e.hi[axis], e.lo[axis]))

        def prefix_suffix(seq):
            pre = []
            lo, hi = seq[0].lo, seq[0].hi
            pre.append((lo, hi))
            for e in seq[1:]:
                lo, hi = _union2(lo, hi, e.lo, e.hi)
                pre.append((lo, hi))
            suf = [None] * len(seq)
            lo, hi = seq[-1].lo, seq[-1].hi
            suf[-1] = (lo, hi)
            for i in range(len(seq) - 2, -1, -1):
                lo, hi = _union2(lo, hi, seq[i].lo, seq[i].hi)
                suf[i] = (lo, hi)
            return pre, suf

        # choose split axis: minimum sum of distribution margins
        best_axis = None
        best_margin = None
        for axis in range(self.d):
            margin_sum = 0.0
            for seq in sortings(axis):
                pre, suf = prefix_suffix(seq)
                for k in range(1, nk + 1):
                    i = m - 1 + k
                    g1 = pre[i - 1]
                    g2 = suf[i]
                    margin_sum += _margin(*g1) + _margin(*g2)
            if best_margin is None or margin_sum < best_margin:
                best_margin = margin_sum
                best_axis = axis

        # choose distribution on that axis: minimum overlap, then minimum area
        best = None
        best_key = None
        for seq in sortings(best_axis):
            pre, suf = prefix_suffix(seq)
            for k in range(1, nk + 1):
                i = m - 1 + k
                g1 = pre[i - 1]
                g2 = suf[i]
                key = (_overlap(*g1, *g2), _area(*g1) + _area(*g2))
                if best_key is None or key < best_key:
                    best_key = key
                    best = (seq, i, g2)
        seq, i, (g2lo, g2hi) = best
        node.entries = list(seq[:i])
        sibling = _MemNode(node.level, list(seq[i:]))
        return _MemEntry(g2lo, g2hi, sibling)

    def finish(self, store: BlockStore) -> "RTree":
        """Persist the built tree into an empty store and return a handle."""
        if not self._ids:
            raise UsageError("cannot persist an empty tree")
        if store.config.block_size != self.config.block_size:
            raise UsageError("store block size disagrees with tree config")
        if store.block_count != 0:
            raise UsageError("store is not empty")
        store.append_block(bytes(self.config.block_size))  # metadata placeholder
        order = []
        ids = {}
        queue = deque([self.root])
        next_id = 1
        while queue:
            n = queue.popleft()
            ids[id(n)] = next_id
            next_id += 1
            order.append(n)
            if n.level > 0:
                for e in n.entries:
                    queue.append(e.child)
        for n in order:
            entries = []
            for e in n.entries:
                cid = e.child if n.level == 0 else ids[id(e.child)]
                entries.append(NodeEntry(Mbr._unchecked(e.lo, e.hi), cid, n.level == 0))
            bid = store.append_block(encode_node(RTreeNode(n.level, entries), self.config))
            assert bid == ids[id(n)]
        meta = META.pack(META_MAGIC, ids[id(self.root)], len(self._ids),
                         0, self.d, self.root.level + 1)
        store.write_block(0, meta + bytes(self.config.block_size - META.size))
        store.flush()
        return RTree(store, root_id=ids[id(self.root)], count=len(self._ids),
                     d=self.d, height=self.root.level + 1)


def bulk_build(points, store: BlockStore, config: TreeConfig | None = None) -> "RTree":
    """Build an R*-tree over ``points`` by repeated insertion, in input order."""
    points = list(points)
    if not points:
        raise UsageError("cannot build a tree over no points")
    d = len(points[0].coords)
    builder = RTreeBuilder(d=d, block_size=store.config.block_size, config=config)
    for p in points:
        builder.insert(p)
    return builder.finish(store)


class RTree:
    """Read-only handle over a persisted tree."""

    def __init__(self, store, root_id, count, d, height):
        self.store = store
        self.root_id = root_id
        self.count = count
        self.d = d
        self.height = height
        self.config = TreeConfig(block_size=store.config.block_size, d=d)

    @classmethod
    def open(cls, store: BlockStore) -> "RTree":
        if store.block_count == 0:
            raise FormatError(f"{store.path}: store holds no tree")
        raw = store.read_block(0)
        magic, root_id, count, _, d, height = META.unpack_from(raw, 0)
        if magic != META_MAGIC:
            raise FormatError(f"{store.path}: block 0 is not tree metadata")
        return cls(store, root_id=root_id, count=count, d=d, height=height)

    def fetch_node(self, block_id: int) -> RTreeNode:
        return decode_node(self.store.read_block(block_id), self.config)

    def root_entry(self) -> NodeEntry:
        """Entry covering the whole tree (fetches the root node once)."""
        root = self.fetch_node(self.root_id)
        return NodeEntry(union_all(e.mbr for e in root.entries), self.root_id, False)

    def iter_nodes(self):
        """Yield (block_id, node) over the whole tree, breadth-first."""
        queue = deque([self.root_id])
        while queue:
            bid = queue.popleft()
            node = self.fetch_node(bid)
            yield bid, node
            if node.level > 0:
                queue.extend(e.id for e in node.entries)

    def range_search(self, rect: Mbr):
        """Point ids whose coordinates lie inside ``rect`` (borders included)."""
        out = []
        stack = [self.root_id]
        while stack:
            node = self.fetch_node(stack.pop())
            for e in node.entries:
                if e.is_point:
                    if rect.contains(e.mbr):
                        out.append(e.id)
                elif _overlap_nonempty(rect, e.mbr):
                    stack.append(e.id)
        return out


def _overlap_nonempty(a: Mbr, b: Mbr) -> bool:
    return all(al <= bh and bl <= ah for al, ah, bl, bh in zip(a.lo, a.hi, b.lo, b.hi))


def check_tree(tree: RTree) -> dict:
    """Validate containment, balance and fanout over the whole tree.

    Returns summary stats including the leaf point ids, for completeness
    checks against the input set. Raises FormatError on any violation.
    """
    cfg = tree.config
    point_ids = []
    nodes = 0
    leaves = 0
    root = tree.fetch_node(tree.root_id)
    if root.level != tree.height - 1:
        raise FormatError("root level disagrees with stored height")
    stack = [(tree.root_id, root, None, True)]
    while stack:
        bid, node, parent_mbr, is_root = stack.pop()
        nodes += 1
        if node.level == 0:
            leaves += 1
        if not node.entries:
            raise FormatError(f"node {bid} is empty")
        n = len(node.entries)
        if is_root:
            if node.level > 0 and n < 2:
                raise FormatError("intermediate root must hold at least 2 entries")
        elif not cfg.min_fanout <= n <= cfg.max_fanout:
            raise FormatError(f"node {bid} fanout {n} outside [{cfg.min_fanout}, {cfg.max_fanout}]")
        if parent_mbr is not None:
            union = union_all(e.mbr for e in node.entries)
            if not parent_mbr.contains(union):
                raise FormatError(f"node {bid} spills outside its parent entry MBR")
        for e in node.entries:
            if node.level == 0:
                if not e.is_point or e.mbr.lo != e.mbr.hi:
                    raise FormatError(f"leaf {bid} holds a non-degenerate entry")
                point_ids.append(e.id)
            else:
                child = tree.fetch_node(e.id)
                if child.level != node.level - 1:
                    raise FormatError(f"child of node {bid} has wrong level")
                stack.append((e.id, child, e.mbr, False))
    if len(set(point_ids)) != len(point_ids):
        raise FormatError("duplicate point id in leaves")
    if len(point_ids) != tree.count:
        raise FormatError("leaf point count disagrees with metadata")
    return {
        "nodes": nodes,
        "leaves": leaves,
        "height": tree.height,
        "point_ids": point_ids,
    }
