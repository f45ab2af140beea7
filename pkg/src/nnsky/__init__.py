"""Disk-backed spatial nearest-neighbor skyline query engine."""

from .errors import (DataError, FormatError, NnskyError, StorageError,
                     UsageError, VerificationError)
from .geometry import (Mbr, Point, max_max_dist, min_dist_point_mbr,
                       min_min_dist, point_dist)
from .n2s2 import (DsState, ds_dominate, ds_fill, ds_insert, ds_new,
                   ds_priority, ds_reconfig, n2s2_run)
from .oracle import OracleResult, oracle_attrs, oracle_run, oracle_skyline
from .rstar import (NodeEntry, RTree, RTreeBuilder, RTreeNode, TreeConfig,
                    bulk_build, check_tree)
from .skyline import (RunMetrics, SkylineResult, bbs_run, dominates,
                      nn_distance)
from .storage import BlockStore, IoCounters, StoreConfig

__version__ = "0.1.0"

__all__ = [
    "BlockStore", "DataError", "DsState", "FormatError", "IoCounters", "Mbr",
    "NnskyError", "NodeEntry", "OracleResult", "Point", "RTree",
    "RTreeBuilder", "RTreeNode", "RunMetrics", "SkylineResult",
    "StorageError", "StoreConfig", "TreeConfig", "UsageError",
    "VerificationError", "bbs_run", "bulk_build", "check_tree", "dominates",
    "ds_dominate", "ds_fill", "ds_insert", "ds_new", "ds_priority",
    "ds_reconfig", "max_max_dist", "min_dist_point_mbr", "min_min_dist",
    "n2s2_run", "nn_distance", "oracle_attrs", "oracle_run",
    "oracle_skyline", "point_dist",
]
