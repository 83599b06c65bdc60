"""On-disk format for a dual index: graphs, entry points, hot tier, counters.

One little-endian binary file carries everything needed to resume serving
against the same dataset: build and hot-tier parameters, a digest binding the
file to its dataset, both adjacency structures (CSR), entry points, and the
access counters. Vectors themselves are not stored; loading requires the
original dataset and refuses one whose digest differs.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import VectorDataset, dataset_digest
from .graph_build import BuildParams, NeighborGraph
from .hot_index import AccessCounter, DualIndex, HotGraph, HotIndexConfig

__all__ = ["save_index", "load_index", "index_segment_sizes", "INDEX_MAGIC", "INDEX_VERSION"]

INDEX_MAGIC = b"HGI1"
INDEX_VERSION = 1


def _adjacency_blob(graph: NeighborGraph):
    degrees = np.fromiter((len(row) for row in graph.adjacency), dtype=np.uint64, count=graph.node_count)
    offsets = np.zeros(graph.node_count + 1, dtype=np.uint64)
    np.cumsum(degrees, out=offsets[1:])
    if graph.node_count:
        flat = np.concatenate([np.asarray(row, dtype=np.int32) for row in graph.adjacency])
    else:
        flat = np.empty(0, dtype=np.int32)
    return offsets.astype("<u8"), flat.astype("<i4")


def index_segment_sizes(index: DualIndex) -> dict:
    """Persisted byte sizes of the adjacency segments, as save_index writes them.

    full_graph_bytes covers the full adjacency (offsets + edges + entry list);
    hot_graph_bytes covers the hot member list, adjacency, and entries (0 when
    no hot tier is published).
    """
    full_offsets, full_flat = _adjacency_blob(index.full_graph)
    full = 8 + full_offsets.nbytes + full_flat.nbytes + 4 + 8 * len(index.entry_points)
    hot = 0
    if index.hot is not None:
        hot_offsets, hot_flat = _adjacency_blob(index.hot.graph)
        hot = (
            8
            + index.hot.members.size * 8
            + hot_offsets.nbytes
            + hot_flat.nbytes
            + 4
            + 8 * len(index.hot.entry_points)
        )
    return {"full_graph_bytes": int(full), "hot_graph_bytes": int(hot)}


def save_index(index: DualIndex, dataset: VectorDataset, path) -> None:
    """Serialize ``index`` (built over ``dataset``) to ``path``."""
    if index.full_graph.node_count != dataset.count:
        raise ValueError(
            f"index covers {index.full_graph.node_count} nodes but dataset has {dataset.count}"
        )
    build = index.config.build
    if not (0 <= build.seed < 2**64):
        raise ValueError("build seed must fit in an unsigned 64-bit field")

    buf = bytearray()
    buf += INDEX_MAGIC
    buf += struct.pack("<H", INDEX_VERSION)
    buf += struct.pack(
        "<IIdIQ",
        build.knng_k,
        build.nn_descent_iters,
        build.angle_degrees,
        build.max_degree,
        build.seed,
    )
    buf += struct.pack("<Qd", index.config.n_query, index.config.index_ratio)
    buf += dataset_digest(dataset)

    buf += struct.pack("<Q", index.full_graph.node_count)
    offsets, flat = _adjacency_blob(index.full_graph)
    buf += offsets.tobytes()
    buf += flat.tobytes()
    buf += struct.pack("<I", len(index.entry_points))
    buf += np.asarray(index.entry_points, dtype="<i8").tobytes()

    if index.hot is None:
        buf += struct.pack("<B", 0)
    else:
        hot = index.hot
        buf += struct.pack("<B", 1)
        buf += struct.pack("<Q", hot.members.size)
        buf += hot.members.astype("<i8").tobytes()
        hot_offsets, hot_flat = _adjacency_blob(hot.graph)
        buf += hot_offsets.tobytes()
        buf += hot_flat.tobytes()
        buf += struct.pack("<I", len(hot.entry_points))
        buf += np.asarray(hot.entry_points, dtype="<i8").tobytes()

    buf += index.counter.snapshot().astype("<i8").tobytes()
    buf += struct.pack("<Q", index.counter.total_since_rebuild)
    Path(path).write_bytes(bytes(buf))


class _Reader:
    def __init__(self, blob: bytes, label: str):
        self.blob = blob
        self.off = 0
        self.label = label

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.blob):
            raise ValueError(
                f"{self.label}: truncated at byte {self.off}, "
                f"needed {n} more of {len(self.blob)} total"
            )
        out = self.blob[self.off : self.off + n]
        self.off += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, dtype, count: int) -> np.ndarray:
        dt = np.dtype(dtype)
        return np.frombuffer(self.take(dt.itemsize * count), dtype=dt).copy()


def _read_adjacency(r: _Reader, node_count: int, max_degree: int) -> NeighborGraph:
    offsets = r.array("<u8", node_count + 1)
    if offsets[0] != 0 or np.any(offsets[1:] < offsets[:-1]):
        raise ValueError(f"{r.label}: corrupt adjacency offsets")
    flat = r.array("<i4", int(offsets[-1]))
    rows = [flat[int(offsets[i]) : int(offsets[i + 1])] for i in range(node_count)]
    return NeighborGraph(node_count=node_count, adjacency=rows, max_degree=max_degree)


def load_index(path, dataset: VectorDataset) -> DualIndex:
    """Load an index file and bind it to ``dataset``, verifying the stored digest."""
    blob = Path(path).read_bytes()
    r = _Reader(blob, str(path))
    if r.take(4) != INDEX_MAGIC:
        raise ValueError(f"{path}: not an index file (bad magic)")
    (version,) = r.unpack("<H")
    if version != INDEX_VERSION:
        raise ValueError(f"{path}: unsupported index version {version}")

    knng_k, iters, angle, max_degree, seed = r.unpack("<IIdIQ")
    n_query, index_ratio = r.unpack("<Qd")
    build = BuildParams(
        knng_k=int(knng_k),
        nn_descent_iters=int(iters),
        angle_degrees=float(angle),
        max_degree=int(max_degree),
        seed=int(seed),
    )
    config = HotIndexConfig(n_query=int(n_query), index_ratio=float(index_ratio), build=build)

    stored_digest = r.take(32)
    if stored_digest != dataset_digest(dataset):
        raise ValueError(f"{path}: index was built for a different dataset (digest mismatch)")

    (node_count,) = r.unpack("<Q")
    node_count = int(node_count)
    if node_count != dataset.count:
        raise ValueError(f"{path}: index node count {node_count} != dataset count {dataset.count}")
    full_graph = _read_adjacency(r, node_count, build.max_degree)
    (n_entries,) = r.unpack("<I")
    entry_points = [int(v) for v in r.array("<i8", int(n_entries))]

    (hot_flag,) = r.unpack("<B")
    hot = None
    if hot_flag not in (0, 1):
        raise ValueError(f"{path}: corrupt hot-tier flag {hot_flag}")
    if hot_flag:
        (member_count,) = r.unpack("<Q")
        members = r.array("<i8", int(member_count))
        hot_graph = _read_adjacency(r, int(member_count), build.max_degree)
        (n_hot_entries,) = r.unpack("<I")
        hot_entries = [int(v) for v in r.array("<i8", int(n_hot_entries))]
        hot = HotGraph(
            graph=hot_graph,
            members=members,
            entry_points=hot_entries,
            subset=dataset.subset(members),
            source_count=dataset.count,
        )

    counts = r.array("<i8", node_count)
    (total,) = r.unpack("<Q")
    if r.off != len(blob):
        raise ValueError(f"{path}: {len(blob) - r.off} trailing bytes after index payload")

    full_graph.validate()
    if hot is not None:
        hot.graph.validate()

    counter = AccessCounter(node_count)
    counter.restore(counts, int(total))
    return DualIndex(
        full_graph=full_graph,
        entry_points=entry_points,
        counter=counter,
        config=config,
        hot=hot,
    )
