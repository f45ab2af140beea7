"""Fixed-size block files with an LRU cache and I/O counters.

Every index lives in its own store file with its own cache, so per-tree
fetch counts can be reported independently. A store file starts with a
16-byte header (magic, block size) followed by fixed-size blocks.

Appends write through to disk and do not populate the cache: the cache
state is then a pure function of the read trace, which is what makes the
physical-read counter reproducible against a standalone LRU simulator.
"""

import os
import struct
from collections import OrderedDict
from dataclasses import dataclass

from .errors import FormatError, StorageError, UsageError

MAGIC = b"NNSKYBLK"
_HEADER = struct.Struct("<8sI4x")  # magic, block_size, reserved
HEADER_SIZE = _HEADER.size


@dataclass
class StoreConfig:
    block_size: int = 1024
    cache_blocks: int = 512

    def __post_init__(self):
        if self.block_size < 256:
            raise UsageError("block_size must be at least 256 bytes")
        if self.cache_blocks < 1:
            raise UsageError("cache_blocks must be at least 1")


@dataclass
class IoCounters:
    logical_fetches: int = 0
    physical_reads: int = 0
    physical_writes: int = 0

    def copy(self):
        return IoCounters(self.logical_fetches, self.physical_reads, self.physical_writes)


class BlockStore:
    """Single-owner block-addressed file with strict LRU read caching."""

    def __init__(self, path, config: StoreConfig | None = None):
        self.path = os.fspath(path)
        self.config = config or StoreConfig()
        self._counters = IoCounters()
        self._cache = OrderedDict()  # block id -> bytes
        try:
            existing = os.path.exists(self.path) and os.path.getsize(self.path) > 0
            self._fh = open(self.path, "r+b" if existing else "w+b")
        except OSError as exc:
            raise StorageError(f"cannot open {self.path}: {exc}") from exc
        if existing:
            self._read_header()
        else:
            self._write_header()
            self._nblocks = 0

    def _write_header(self):
        try:
            self._fh.seek(0)
            self._fh.write(_HEADER.pack(MAGIC, self.config.block_size))
            self._fh.flush()
        except OSError as exc:
            raise StorageError(f"cannot write header: {exc}") from exc

    def _read_header(self):
        self._fh.seek(0)
        raw = self._fh.read(HEADER_SIZE)
        if len(raw) < HEADER_SIZE:
            raise FormatError(f"{self.path}: truncated store header")
        magic, block_size = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise FormatError(f"{self.path}: bad magic {magic!r}")
        if block_size != self.config.block_size:
            raise FormatError(
                f"{self.path}: store has block_size {block_size}, "
                f"opened with {self.config.block_size}"
            )
        size = os.path.getsize(self.path)
        body = size - HEADER_SIZE
        if body % block_size != 0:
            raise FormatError(f"{self.path}: file size not a whole number of blocks")
        self._nblocks = body // block_size

    @property
    def block_count(self):
        return self._nblocks

    def counters(self) -> IoCounters:
        return self._counters.copy()

    def reset_counters(self):
        self._counters = IoCounters()

    def clear_cache(self):
        self._cache.clear()

    def _offset(self, block_id):
        return HEADER_SIZE + block_id * self.config.block_size

    def read_block(self, block_id: int) -> bytes:
        if not 0 <= block_id < self._nblocks:
            raise UsageError(f"block id {block_id} out of range (0..{self._nblocks - 1})")
        self._counters.logical_fetches += 1
        cached = self._cache.get(block_id)
        if cached is not None:
            self._cache.move_to_end(block_id)
            return cached
        self._counters.physical_reads += 1
        try:
            self._fh.seek(self._offset(block_id))
            data = self._fh.read(self.config.block_size)
        except OSError as exc:
            raise StorageError(f"read of block {block_id} failed: {exc}") from exc
        if len(data) != self.config.block_size:
            raise StorageError(f"short read on block {block_id}")
        self._cache[block_id] = data
        if len(self._cache) > self.config.cache_blocks:
            self._cache.popitem(last=False)
        return data

    def append_block(self, data: bytes) -> int:
        if len(data) != self.config.block_size:
            raise UsageError(
                f"block must be exactly {self.config.block_size} bytes, got {len(data)}"
            )
        block_id = self._nblocks
        try:
            self._fh.seek(self._offset(block_id))
            self._fh.write(data)
        except OSError as exc:
            raise StorageError(f"append failed: {exc}") from exc
        self._counters.physical_writes += 1
        self._nblocks += 1
        return block_id

    def write_block(self, block_id: int, data: bytes):
        """Overwrite an existing block in place (used for metadata blocks)."""
        if not 0 <= block_id < self._nblocks:
            raise UsageError(f"block id {block_id} out of range")
        if len(data) != self.config.block_size:
            raise UsageError(f"block must be exactly {self.config.block_size} bytes")
        try:
            self._fh.seek(self._offset(block_id))
            self._fh.write(data)
        except OSError as exc:
            raise StorageError(f"write of block {block_id} failed: {exc}") from exc
        self._counters.physical_writes += 1
        if block_id in self._cache:
            self._cache[block_id] = data

    def flush(self):
        try:
            self._fh.flush()
        except OSError as exc:
            raise StorageError(f"flush failed: {exc}") from exc

    def close(self):
        if self._fh is not None:
            self.flush()
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False
