"""The hot tier: access counting, hot-set selection, subset builds, publication.

A DualIndex pairs the full graph with a small graph over the most frequently
returned nodes. Queries hit the hot graph first; the counter decides when the
hot set is re-derived. Publication swaps the hot graph reference atomically,
so concurrent readers always see a complete old or new graph, never a mix.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field, replace

import numpy as np

from .core import VectorDataset
from .graph_build import BuildParams, NeighborGraph, build_full_index

__all__ = [
    "AccessCounter",
    "HotIndexConfig",
    "HotGraph",
    "DualIndex",
    "build_dual_index",
    "record_access",
    "should_rebuild",
    "select_hot_nodes",
    "build_hot_index",
    "publish_hot",
    "refresh_hot_if_due",
    "effective_hot_knng_k",
]


class AccessCounter:
    """Thread-safe per-node hit counts plus a query-volume trigger counter."""

    def __init__(self, node_count: int):
        if node_count < 1:
            raise ValueError("node_count must be >= 1")
        self.node_count = node_count
        self._counts = np.zeros(node_count, dtype=np.int64)
        self._total_since_rebuild = 0
        self._lock = threading.Lock()

    def record(self, node: int) -> None:
        if not (0 <= node < self.node_count):
            raise ValueError(f"node id {node} out of range [0, {self.node_count})")
        with self._lock:
            self._counts[node] += 1
            self._total_since_rebuild += 1

    def record_many(self, nodes) -> None:
        for node in nodes:
            self.record(int(node))

    def snapshot(self) -> np.ndarray:
        with self._lock:
            return self._counts.copy()

    @property
    def total_since_rebuild(self) -> int:
        with self._lock:
            return self._total_since_rebuild

    def on_publish(self) -> None:
        """Halve per-node counts (aging) and reset the trigger counter."""
        with self._lock:
            self._counts //= 2
            self._total_since_rebuild = 0

    def restore(self, counts: np.ndarray, total: int) -> None:
        counts = np.asarray(counts, dtype=np.int64)
        if counts.shape != (self.node_count,):
            raise ValueError("counts shape does not match node_count")
        with self._lock:
            self._counts[:] = counts
            self._total_since_rebuild = int(total)


@dataclass(frozen=True)
class HotIndexConfig:
    """Hot-tier policy: rebuild cadence, hot-set size, and build parameters."""

    n_query: int = 10_000
    index_ratio: float = 0.01
    build: BuildParams = field(default_factory=BuildParams)

    def __post_init__(self):
        if self.n_query < 1:
            raise ValueError(f"n_query must be >= 1, got {self.n_query}")
        if not (0.0 < self.index_ratio <= 1.0):
            raise ValueError(f"index_ratio must lie in (0, 1], got {self.index_ratio}")

    def hot_size(self, node_count: int) -> int:
        return min(node_count, math.ceil(self.index_ratio * node_count))

    def validate_for(self, node_count: int) -> None:
        """The hot set must be large enough to build a graph over (after knng_k scaling)."""
        size = self.hot_size(node_count)
        k = effective_hot_knng_k(self.build.knng_k, size)
        if size < k + 1:
            raise ValueError(
                f"hot set of {size} nodes cannot support knng_k={k}; "
                f"raise index_ratio or shrink knng_k"
            )


def effective_hot_knng_k(knng_k: int, hot_size: int) -> int:
    """KNN width used for hot builds: scaled down so tiny subsets stay buildable."""
    return max(1, min(knng_k, hot_size // 5))


@dataclass
class HotGraph:
    """Graph over the hot subset. Local ids index ``members`` (sorted global ids)."""

    graph: NeighborGraph
    members: np.ndarray
    entry_points: list
    subset: VectorDataset
    source_count: int

    def __post_init__(self):
        self.members = np.asarray(self.members, dtype=np.int64)
        if self.members.size != self.graph.node_count:
            raise ValueError("members length must equal hot graph node count")
        if np.any(self.members[1:] <= self.members[:-1]):
            raise ValueError("members must be strictly ascending global ids")

    @property
    def local_entry_points(self) -> list:
        return [int(np.searchsorted(self.members, g)) for g in self.entry_points]


@dataclass
class DualIndex:
    """Full graph plus (optionally) a published hot graph and its access counter."""

    full_graph: NeighborGraph
    entry_points: list
    counter: AccessCounter
    config: HotIndexConfig
    hot: HotGraph | None = None


def build_dual_index(dataset: VectorDataset, config: HotIndexConfig) -> DualIndex:
    """Build the full graph and wrap it in a cold DualIndex (no hot tier yet)."""
    config.validate_for(dataset.count)
    graph, entries = build_full_index(dataset, config.build)
    return DualIndex(
        full_graph=graph,
        entry_points=entries,
        counter=AccessCounter(dataset.count),
        config=config,
        hot=None,
    )


def refresh_hot_if_due(index: DualIndex, dataset: VectorDataset) -> bool:
    """Rebuild and publish the hot tier when the query-volume trigger has fired.

    Returns True when a new hot graph was published. Call between queries;
    the publish itself is a single reference swap, so readers are never
    exposed to a half-built graph.
    """
    if not should_rebuild(index.counter, index.config):
        return False
    n_idx = index.config.hot_size(dataset.count)
    hot_ids = select_hot_nodes(index.counter, n_idx)
    hot = build_hot_index(dataset, hot_ids, index.config.build)
    publish_hot(index, hot)
    return True


def record_access(counter: AccessCounter, node: int) -> None:
    """Count one result hit for ``node``. Safe under concurrent callers."""
    counter.record(node)


def should_rebuild(counter: AccessCounter, config: HotIndexConfig) -> bool:
    """True once strictly more than ``n_query`` hits accrued since the last publish."""
    return counter.total_since_rebuild > config.n_query


def select_hot_nodes(counter: AccessCounter, n_idx: int) -> np.ndarray:
    """The ``n_idx`` most-hit nodes, most frequent first; count ties broken by ascending id."""
    if n_idx < 1:
        raise ValueError(f"n_idx must be >= 1, got {n_idx}")
    if n_idx > counter.node_count:
        raise ValueError(f"n_idx={n_idx} exceeds node count {counter.node_count}")
    counts = counter.snapshot()
    ids = np.arange(counter.node_count, dtype=np.int64)
    order = np.lexsort((ids, -counts))
    return ids[order[:n_idx]]


def build_hot_index(dataset: VectorDataset, hot_ids, build: BuildParams) -> HotGraph:
    """Build a graph over the given global ids with the same pipeline as the full index.

    ``knng_k`` is scaled down for small subsets (see effective_hot_knng_k);
    all other parameters, including the seed, are reused as given.
    """
    members = np.unique(np.asarray(hot_ids, dtype=np.int64))
    if members.size != len(hot_ids):
        raise ValueError("hot_ids must not contain duplicates")
    if members.size and (members[0] < 0 or members[-1] >= dataset.count):
        raise ValueError("hot_ids contain out-of-range ids")
    k = effective_hot_knng_k(build.knng_k, members.size)
    if members.size < k + 1:
        raise ValueError(f"hot set of {members.size} nodes is too small for knng_k={k}")
    params = replace(build, knng_k=k)
    subset = dataset.subset(members)
    graph, local_entries = build_full_index(subset, params)
    return HotGraph(
        graph=graph,
        members=members,
        entry_points=[int(members[e]) for e in local_entries],
        subset=subset,
        source_count=dataset.count,
    )


def publish_hot(index: DualIndex, hot: HotGraph) -> DualIndex:
    """Swap in a new hot graph atomically; age counts and reset the rebuild trigger.

    In-flight searches keep whichever hot graph reference they captured at
    query start, so they see entirely the old or entirely the new graph.
    """
    if hot.source_count != index.full_graph.node_count:
        raise ValueError("hot graph was built against a different dataset")
    if hot.members.size and hot.members[-1] >= index.full_graph.node_count:
        raise ValueError("hot graph members out of range for this index")
    index.hot = hot  # single reference assignment: atomic for readers
    index.counter.on_publish()
    return index
