"""Vector datasets, distance kernels, exact search, and on-disk vector formats.

Distances are Euclidean (L2), computed and accumulated in 32-bit floats to
match the storage precision of the vectors themselves. All distance ties
throughout the library are broken by ascending node id, which keeps every
search and build step deterministic.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "VectorDataset",
    "ResultList",
    "distance",
    "batch_distances",
    "k_smallest",
    "brute_force_knn",
    "recall_at_k",
    "load_fvecs",
    "write_fvecs",
    "load_ivecs",
    "write_ivecs",
    "synthetic_dataset",
    "dataset_digest",
]

# Rows per chunk when scanning a whole dataset; bounds transient memory.
_SCAN_CHUNK = 1 << 18


@dataclass(frozen=True)
class VectorDataset:
    """An immutable collection of float32 vectors addressed by dense ids 0..count-1."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"dataset array must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"dataset must have at least one row and one column, got {arr.shape}")
        if not np.isfinite(arr).all():
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise ValueError(f"dataset contains a non-finite value at row {bad[0]}, column {bad[1]}")
        object.__setattr__(self, "data", arr)

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def subset(self, ids: np.ndarray) -> "VectorDataset":
        """New dataset holding rows ``ids`` in the given order (ids are re-densified)."""
        return VectorDataset(self.data[np.asarray(ids, dtype=np.int64)])


@dataclass(frozen=True)
class ResultList:
    """Nearest-neighbor results: ids with their distances, ascending by (distance, id)."""

    ids: np.ndarray
    distances: np.ndarray

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64)
        d = np.asarray(self.distances, dtype=np.float32)
        if ids.shape != d.shape or ids.ndim != 1:
            raise ValueError("ids and distances must be 1-D arrays of equal length")
        if ids.size > 1:
            if np.any(d[1:] < d[:-1]):
                raise ValueError("result distances must be non-decreasing")
            tied = d[1:] == d[:-1]
            if np.any(ids[1:][tied] <= ids[:-1][tied]):
                raise ValueError("tied distances must be ordered by ascending id")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "distances", d)

    def __len__(self) -> int:
        return int(self.ids.size)

    def __iter__(self):
        return iter(zip(self.ids.tolist(), self.distances.tolist()))


def _as_query(q, dim: int) -> np.ndarray:
    q = np.asarray(q, dtype=np.float32).reshape(-1)
    if q.size != dim:
        raise ValueError(f"query has dimension {q.size}, dataset has dimension {dim}")
    if not np.isfinite(q).all():
        raise ValueError("query contains a non-finite value")
    return q


def batch_distances(points: np.ndarray, q: np.ndarray) -> np.ndarray:
    """L2 distances from ``q`` to every row of ``points``, float32 in and out.

    This is the single distance kernel for the whole library; search, build,
    and brute force all route through it so their values agree bit for bit.
    """
    diff = points - q
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def distance(a, b) -> float:
    """L2 distance between two vectors of equal dimension (float32 accumulation)."""
    a = np.asarray(a, dtype=np.float32).reshape(-1)
    b = np.asarray(b, dtype=np.float32).reshape(-1)
    if a.size != b.size:
        raise ValueError(f"dimension mismatch: {a.size} vs {b.size}")
    return float(batch_distances(a[None, :], b)[0])


def k_smallest(ids: np.ndarray, dists: np.ndarray, k: int):
    """The k entries with smallest (distance, id), exact under ties.

    Returns (ids, dists) sorted ascending by (distance, id). If fewer than k
    entries are supplied, all of them are returned.
    """
    ids = np.asarray(ids, dtype=np.int64)
    dists = np.asarray(dists)
    if ids.size <= k:
        order = np.lexsort((ids, dists))
        return ids[order], dists[order]
    part = np.argpartition(dists, k - 1)[:k]
    bound = dists[part].max()
    cand = np.flatnonzero(dists <= bound)
    order = np.lexsort((ids[cand], dists[cand]))
    cand = cand[order[:k]]
    return ids[cand], dists[cand]


def brute_force_knn(dataset: VectorDataset, q, k: int) -> ResultList:
    """Exact k nearest neighbors by full scan. Ties broken by ascending id."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > dataset.count:
        raise ValueError(f"k={k} exceeds dataset size {dataset.count}")
    q = _as_query(q, dataset.dim)
    n = dataset.count
    if n <= _SCAN_CHUNK:
        d = batch_distances(dataset.data, q)
        ids, dd = k_smallest(np.arange(n, dtype=np.int64), d, k)
        return ResultList(ids, dd)
    best_ids = np.empty(0, dtype=np.int64)
    best_d = np.empty(0, dtype=np.float32)
    for start in range(0, n, _SCAN_CHUNK):
        stop = min(start + _SCAN_CHUNK, n)
        d = batch_distances(dataset.data[start:stop], q)
        ids = np.arange(start, stop, dtype=np.int64)
        best_ids, best_d = k_smallest(
            np.concatenate([best_ids, ids]), np.concatenate([best_d, d]), k
        )
    return ResultList(best_ids, best_d)


def _result_ids(obj) -> np.ndarray:
    return obj.ids if isinstance(obj, ResultList) else np.asarray(obj, dtype=np.int64)


def recall_at_k(approx, truth, k: int) -> float:
    """Top-k id overlap |approx[:k] & truth[:k]| / k.

    Accepts ResultList objects or plain id arrays (already ranked best first).
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    a_ids, t_ids = _result_ids(approx), _result_ids(truth)
    if a_ids.size < k or t_ids.size < k:
        raise ValueError(f"both result lists must hold at least k={k} entries")
    a = set(a_ids[:k].tolist())
    t = set(t_ids[:k].tolist())
    return len(a & t) / k


# ---------------------------------------------------------------------------
# fvecs / ivecs: the interchange format used by the public SIFT/GIST corpora.
# Each record is a little-endian int32 dimension d followed by d components
# (float32 for .fvecs, int32 for .ivecs).
# ---------------------------------------------------------------------------


def _load_vecs(path: str, dtype) -> np.ndarray:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 4:
        raise ValueError(f"{path}: truncated header at byte offset 0")
    if len(raw) % 4 != 0:
        raise ValueError(f"{path}: truncated record at byte offset {len(raw) - (len(raw) % 4)}")
    words = np.frombuffer(raw, dtype="<i4")
    dim = int(words[0])
    if dim < 1:
        raise ValueError(f"{path}: invalid dimension {dim} at byte offset 0")
    rec = dim + 1
    if words.size % rec != 0:
        raise ValueError(
            f"{path}: truncated record at byte offset {(words.size // rec) * rec * 4}"
        )
    table = words.reshape(-1, rec)
    dims = table[:, 0]
    bad = np.flatnonzero(dims != dim)
    if bad.size:
        raise ValueError(
            f"{path}: inconsistent dimension {int(dims[bad[0]])} at byte offset {int(bad[0]) * rec * 4}"
        )
    body = table[:, 1:]
    if dtype == np.float32:
        out = body.view("<f4")
        if not np.isfinite(out).all():
            r, c = np.argwhere(~np.isfinite(out))[0]
            off = (int(r) * rec + 1 + int(c)) * 4
            raise ValueError(f"{path}: non-finite value at byte offset {off}")
        return out.astype(np.float32)
    return body.astype(np.int32)


def load_fvecs(path: str) -> VectorDataset:
    """Load a .fvecs file. Raises ValueError naming the byte offset on malformed input."""
    return VectorDataset(_load_vecs(path, np.float32))


def load_ivecs(path: str) -> np.ndarray:
    """Load a .ivecs file as an int32 array of shape (count, dim)."""
    return _load_vecs(path, np.int32)


def _write_vecs(path: str, arr: np.ndarray, dtype) -> None:
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise ValueError(f"expected a 2-D array with at least one column, got shape {arr.shape}")
    n, d = arr.shape
    out = np.empty((n, d + 1), dtype="<i4")
    out[:, 0] = d
    if dtype == np.float32:
        out[:, 1:] = np.ascontiguousarray(arr, dtype="<f4").view("<i4")
    else:
        out[:, 1:] = np.ascontiguousarray(arr, dtype="<i4")
    with open(path, "wb") as f:
        f.write(out.tobytes())


def write_fvecs(path: str, vectors) -> None:
    """Write float32 vectors (array or VectorDataset) in .fvecs layout."""
    arr = vectors.data if isinstance(vectors, VectorDataset) else np.asarray(vectors, dtype=np.float32)
    _write_vecs(path, arr, np.float32)


def write_ivecs(path: str, rows) -> None:
    """Write int32 rows (for example ground-truth id lists) in .ivecs layout."""
    _write_vecs(path, np.asarray(rows, dtype=np.int32), np.int32)


def synthetic_dataset(
    count: int,
    dim: int,
    clusters: int = 1,
    seed: int = 0,
    center_seed: int | None = None,
    center_scale: float = 10.0,
    spread: float = 1.0,
) -> VectorDataset:
    """Seeded Gaussian point cloud; a mixture when ``clusters`` > 1.

    ``center_seed`` fixes the mixture centers independently of the point noise,
    so query sets can be drawn from the same mixture as a corpus by reusing the
    center seed with a different ``seed``. Widely separated clusters make a
    hard corpus for any single-entry graph: cross-cluster candidates never
    appear in local neighborhoods, so navigation leans on repair bridges.
    """
    if count < 1 or dim < 1 or clusters < 1:
        raise ValueError("count, dim, and clusters must all be >= 1")
    centers = np.random.default_rng(seed if center_seed is None else center_seed).normal(
        0.0, center_scale, size=(clusters, dim)
    )
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, clusters, size=count)
    pts = centers[labels] + rng.normal(0.0, spread, size=(count, dim))
    return VectorDataset(pts.astype(np.float32))


def dataset_digest(dataset: VectorDataset) -> bytes:
    """SHA-256 over (count, dim, raw vector bytes); identifies a dataset on disk."""
    h = hashlib.sha256()
    h.update(np.array([dataset.count, dataset.dim], dtype="<i8").tobytes())
    h.update(np.ascontiguousarray(dataset.data, dtype="<f4").tobytes())
    return h.digest()
