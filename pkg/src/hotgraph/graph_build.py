"""Proximity-graph construction: NN-descent, angle-based pruning, connectivity repair.

The build pipeline is KNN graph -> per-node angular pruning -> entry point
selection -> reachability repair. All stages are deterministic for a fixed
``BuildParams.seed``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import VectorDataset, batch_distances

__all__ = [
    "BuildParams",
    "NeighborGraph",
    "build_knng",
    "ssg_prune",
    "select_entry_points",
    "build_full_index",
]

# Per-neighborhood sample width for the NN-descent join; bounds the candidate
# matrix at roughly 2*s^2 columns regardless of knng_k.
_JOIN_SAMPLE = 32
# Candidate rows processed per vectorized block in ssg_prune.
_PRUNE_BLOCK = 256
_CHUNK_ROWS = 256


@dataclass(frozen=True)
class BuildParams:
    """Knobs for graph construction.

    knng_k: neighbors per node in the intermediate KNN graph.
    nn_descent_iters: fixed number of NN-descent refinement rounds.
    angle_degrees: minimum pairwise angle (at the owning node) that any two
        retained neighbors must subtend.
    max_degree: out-degree cap of the pruned graph.
    """

    knng_k: int = 100
    nn_descent_iters: int = 8
    angle_degrees: float = 60.0
    max_degree: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.knng_k < 1:
            raise ValueError(f"knng_k must be >= 1, got {self.knng_k}")
        if self.nn_descent_iters < 0:
            raise ValueError(f"nn_descent_iters must be >= 0, got {self.nn_descent_iters}")
        if not (0.0 < self.angle_degrees < 180.0):
            raise ValueError(f"angle_degrees must lie in (0, 180), got {self.angle_degrees}")
        if self.max_degree < 1:
            raise ValueError(f"max_degree must be >= 1, got {self.max_degree}")


@dataclass
class NeighborGraph:
    """Directed adjacency over dense node ids; each list sorted by distance to its owner."""

    node_count: int
    adjacency: list
    max_degree: int

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("graph must contain at least one node")
        if len(self.adjacency) != self.node_count:
            raise ValueError("adjacency length must equal node_count")

    def out_degree_total(self) -> int:
        return int(sum(a.size for a in self.adjacency))

    def validate(self, dataset: VectorDataset | None = None) -> None:
        """Check structural invariants; with a dataset, also check sort order."""
        for node, nbrs in enumerate(self.adjacency):
            if nbrs.size > self.max_degree:
                raise ValueError(f"node {node} exceeds max_degree {self.max_degree}")
            if np.unique(nbrs).size != nbrs.size:
                raise ValueError(f"node {node} has duplicate neighbors")
            if nbrs.size and (nbrs.min() < 0 or nbrs.max() >= self.node_count or node in nbrs):
                raise ValueError(f"node {node} has an out-of-range or self edge")
            if dataset is not None and nbrs.size > 1:
                d = batch_distances(dataset.data[nbrs], dataset.data[node])
                if np.any(d[1:] < d[:-1]):
                    raise ValueError(f"node {node} neighbor list is not distance-sorted")


def _sort_rows_by_dist_then_id(ids: np.ndarray, d: np.ndarray):
    # Stable sort by id first, then by distance: yields (distance, id) lexicographic order.
    o1 = np.argsort(ids, axis=1, kind="stable")
    ids = np.take_along_axis(ids, o1, axis=1)
    d = np.take_along_axis(d, o1, axis=1)
    o2 = np.argsort(d, axis=1, kind="stable")
    return np.take_along_axis(ids, o2, axis=1), np.take_along_axis(d, o2, axis=1)


def _row_distances(data: np.ndarray, ids: np.ndarray) -> np.ndarray:
    """Distances from each row i of the dataset to the points ids[i, :]."""
    n, w = ids.shape
    out = np.empty((n, w), dtype=np.float32)
    for start in range(0, n, _CHUNK_ROWS):
        stop = min(start + _CHUNK_ROWS, n)
        gathered = data[ids[start:stop]]
        diff = gathered - data[start:stop, None, :]
        out[start:stop] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return out


def _init_random_neighbors(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    if k >= n // 2:
        # Small or near-complete case: per-row random permutations, self excluded.
        order = np.argsort(rng.random((n, n)), axis=1, kind="stable")
        keep = order != np.arange(n)[:, None]
        return order[keep].reshape(n, n - 1)[:, :k].astype(np.int64)
    ids = rng.integers(0, n - 1, size=(n, k), dtype=np.int64)
    ids += ids >= np.arange(n)[:, None]
    while True:
        srt = np.sort(ids, axis=1)
        dup_rows = np.flatnonzero((srt[:, 1:] == srt[:, :-1]).any(axis=1))
        if dup_rows.size == 0:
            return ids
        for r in dup_rows:
            row = ids[r]
            seen, first = np.unique(row, return_index=True)
            mask = np.ones(k, dtype=bool)
            mask[first] = False
            redraw = rng.integers(0, n - 1, size=int(mask.sum()))
            redraw += redraw >= r
            row[mask] = redraw


def _sample_reverse(ids: np.ndarray, n: int, s: int, rng: np.random.Generator) -> np.ndarray:
    """Up to s reverse-edge sources per node, randomly subsampled; -1 pads short rows."""
    k = ids.shape[1]
    src = np.repeat(np.arange(n, dtype=np.int32), k)
    tgt = ids.reshape(-1)
    perm = rng.permutation(n * k)
    src, tgt = src[perm], tgt[perm]
    order = np.argsort(tgt, kind="stable")
    src, tgt = src[order], tgt[order]
    counts = np.bincount(tgt, minlength=n)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    within = np.arange(tgt.size) - starts[tgt]
    sel = within < s
    rev = np.full((n, s), -1, dtype=np.int32)
    rev[tgt[sel], within[sel]] = src[sel]
    return rev


def build_knng(dataset: VectorDataset, params: BuildParams) -> NeighborGraph:
    """Approximate KNN graph by NN-descent.

    Starts from a random k-regular graph and runs a fixed number of
    neighbor-of-neighbor join rounds, keeping the best ``knng_k`` per node.
    Deterministic for a fixed seed.
    """
    n, k = dataset.count, params.knng_k
    if k >= n:
        raise ValueError(f"knng_k={k} must be smaller than the dataset size {n}")
    data = dataset.data
    rng = np.random.default_rng(params.seed & 0xFFFFFFFFFFFFFFFF)

    ids = _init_random_neighbors(n, k, rng).astype(np.int32)
    d = _row_distances(data, ids)
    ids, d = _sort_rows_by_dist_then_id(ids, d)

    s = min(k, _JOIN_SAMPLE)
    rows = np.arange(n, dtype=np.int32)
    for _ in range(params.nn_descent_iters):
        if s == k:
            fwd = ids
        else:
            cols = np.argsort(rng.random((n, k)), axis=1, kind="stable")[:, :s]
            fwd = np.take_along_axis(ids, cols, axis=1)
        rev = _sample_reverse(ids, n, s, rng)
        rev_safe = np.where(rev < 0, 0, rev)
        # Join: reverse edges, neighbors of neighbors, neighbors of reverse neighbors.
        ff = fwd[fwd.reshape(-1)].reshape(n, s * s)
        fr = fwd[rev_safe.reshape(-1)].reshape(n, s * s)
        fr[np.repeat(rev < 0, s, axis=1)] = -1
        cand = np.concatenate([rev, ff, fr], axis=1)

        new_ids = np.empty_like(ids)
        new_d = np.empty_like(d)
        for start in range(0, n, _CHUNK_ROWS):
            stop = min(start + _CHUNK_ROWS, n)
            c = cand[start:stop]
            bad = (c < 0) | (c == rows[start:stop, None])
            c_safe = np.where(bad, 0, c)
            gathered = data[c_safe]
            diff = gathered - data[start:stop, None, :]
            cd = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
            all_ids = np.concatenate([ids[start:stop], np.where(bad, n, c)], axis=1)
            all_d = np.concatenate([d[start:stop], np.where(bad, np.inf, cd)], axis=1)
            o1 = np.argsort(all_ids, axis=1, kind="stable")
            all_ids = np.take_along_axis(all_ids, o1, axis=1)
            all_d = np.take_along_axis(all_d, o1, axis=1)
            dup = np.zeros_like(all_ids, dtype=bool)
            dup[:, 1:] = all_ids[:, 1:] == all_ids[:, :-1]
            all_d[dup] = np.inf
            o2 = np.argsort(all_d, axis=1, kind="stable")
            new_ids[start:stop] = np.take_along_axis(all_ids, o2, axis=1)[:, :k]
            new_d[start:stop] = np.take_along_axis(all_d, o2, axis=1)[:, :k]
        ids, d = new_ids, new_d

    adjacency = [ids[i].astype(np.int32) for i in range(n)]
    return NeighborGraph(node_count=n, adjacency=adjacency, max_degree=k)


def _pair_sq_dists(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Squared L2 distances between all rows of u and v, in float64."""
    diff = u[:, None, :] - v[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def ssg_prune(
    knng: NeighborGraph,
    dataset: VectorDataset,
    node: int,
    angle_degrees: float,
    max_degree: int,
) -> np.ndarray:
    """Select a diverse neighbor set for one node from its 2-hop KNN neighborhood.

    Candidates (direct neighbors plus neighbors-of-neighbors) are visited in
    ascending distance order; a candidate is kept only if the angle it subtends
    at the node with every already-kept neighbor is at least ``angle_degrees``.
    The cosine test uses the law of cosines on the three pairwise distances, so
    no vector normalization is needed. Candidates coincident with the node are
    skipped outright. The kept list is returned in ascending distance order,
    truncated to ``max_degree``; because kept entries accrue in ascending
    distance order, stopping as soon as ``max_degree`` survive is equivalent.
    """
    data = dataset.data
    adj = knng.adjacency
    nbrs = adj[node]
    if nbrs.size == 0:
        return np.empty(0, dtype=np.int32)
    pool = [nbrs] + [adj[int(u)] for u in nbrs]
    cand = np.unique(np.concatenate(pool)).astype(np.int64)
    cand = cand[cand != node]
    if cand.size == 0:
        return np.empty(0, dtype=np.int32)
    d = batch_distances(data[cand], data[node]).astype(np.float64)
    order = np.argsort(d, kind="stable")  # cand is id-sorted, so this is (distance, id) order
    cand, d = cand[order], d[order]
    nz = d > 0.0
    cand, d = cand[nz], d[nz]
    if cand.size == 0:
        return np.empty(0, dtype=np.int32)

    cos_limit = math.cos(math.radians(angle_degrees))
    p = data[node].astype(np.float64)
    kept: list[int] = []
    kept_pts = np.empty((0, data.shape[1]), dtype=np.float64)
    kept_sq = np.empty(0, dtype=np.float64)

    for start in range(0, cand.size, _PRUNE_BLOCK):
        stop = min(start + _PRUNE_BLOCK, cand.size)
        bids = cand[start:stop]
        bd = d[start:stop]
        bpts = data[bids].astype(np.float64)
        bsq = bd * bd
        block_base = len(kept)
        if kept:
            # Rejection against the current kept set is final: the set only grows.
            c_sq = _pair_sq_dists(bpts, kept_pts)
            cosv = (bsq[:, None] + kept_sq[None, :] - c_sq) / (2.0 * bd[:, None] * np.sqrt(kept_sq)[None, :])
            ok = np.all(cosv <= cos_limit, axis=1)
        else:
            ok = np.ones(bids.size, dtype=bool)
        for j in np.flatnonzero(ok):
            if len(kept) > block_base:
                # Survivors must also clear entries kept earlier in this same block.
                sq_new = _pair_sq_dists(bpts[j : j + 1], kept_pts[block_base:])[0]
                cos_new = (bsq[j] + kept_sq[block_base:] - sq_new) / (
                    2.0 * bd[j] * np.sqrt(kept_sq[block_base:])
                )
                if np.any(cos_new > cos_limit):
                    continue
            kept.append(int(bids[j]))
            kept_pts = np.concatenate([kept_pts, bpts[j : j + 1]], axis=0)
            kept_sq = np.concatenate([kept_sq, bsq[j : j + 1]])
            if len(kept) >= max_degree:
                return np.asarray(kept, dtype=np.int32)
    return np.asarray(kept, dtype=np.int32)


def select_entry_points(dataset: VectorDataset, graph: NeighborGraph | None = None) -> list:
    """The approximate medoid: the point nearest the dataset centroid (ties: lowest id)."""
    centroid = dataset.data.mean(axis=0, dtype=np.float64).astype(np.float32)
    d = batch_distances(dataset.data, centroid)
    return [int(np.argmin(d))]


def _bfs_reachable(adjacency, entries, n: int) -> np.ndarray:
    seen = np.zeros(n, dtype=bool)
    stack = [e for e in entries]
    for e in entries:
        seen[e] = True
    while stack:
        u = stack.pop()
        nbrs = adjacency[u]
        fresh = nbrs[~seen[nbrs]]
        if fresh.size:
            seen[fresh] = True
            stack.extend(fresh.tolist())
    return seen


def _insert_edge_sorted(adjacency, dataset, owner: int, target: int, angle_degrees: float, max_degree: int) -> None:
    """Insert owner->target keeping distance order and the pairwise angle bound.

    Existing edges that subtend less than the angle bound with the new edge
    are evicted (the bridge now covers their direction), then the longest
    remaining edge if the list is still over the degree cap. The new edge
    always survives: dropping it would undo the repair and the reachability
    loop would spin on the same node.
    """
    nbrs = adjacency[owner]
    if target in nbrs:
        return
    o = dataset.data[owner].astype(np.float64)
    vt = dataset.data[target].astype(np.float64) - o
    nt = float(np.linalg.norm(vt))
    keep_ids = nbrs.astype(np.int64)
    if keep_ids.size and nt > 0.0:
        vn = dataset.data[keep_ids].astype(np.float64) - o
        nn = np.linalg.norm(vn, axis=1)
        cos = (vn @ vt) / np.where(nn > 0.0, nn * nt, 1.0)
        redundant = (cos > math.cos(math.radians(angle_degrees))) & (nn > 0.0)
        keep_ids = keep_ids[~redundant]
    d = (
        batch_distances(dataset.data[keep_ids], dataset.data[owner])
        if keep_ids.size
        else np.empty(0, np.float32)
    )
    dt = batch_distances(dataset.data[target : target + 1], dataset.data[owner])[0]
    ids = np.concatenate([keep_ids, [target]])
    dd = np.concatenate([d, [dt]])
    order = np.lexsort((ids, dd))
    ids, dd = ids[order], dd[order]
    if ids.size > max_degree:
        keep = np.flatnonzero(ids != target)[: max_degree - 1]
        keep = np.sort(np.concatenate([keep, np.flatnonzero(ids == target)]))
        ids = ids[keep]
    adjacency[owner] = ids.astype(np.int32)


def build_full_index(dataset: VectorDataset, params: BuildParams):
    """Build the searchable graph: KNN graph, angular pruning, reachability repair.

    Returns (NeighborGraph, entry_points). After repair every node is reachable
    from the entry points.
    """
    knng = build_knng(dataset, params)
    n = dataset.count
    adjacency = [
        ssg_prune(knng, dataset, node, params.angle_degrees, params.max_degree)
        for node in range(n)
    ]
    entries = select_entry_points(dataset, knng)

    guard = 0
    while True:
        seen = _bfs_reachable(adjacency, entries, n)
        missing = np.flatnonzero(~seen)
        if missing.size == 0:
            break
        guard += 1
        if guard > 4 * n:
            raise RuntimeError("connectivity repair failed to converge")
        u = int(missing[0])
        reached = np.flatnonzero(seen)
        d = batch_distances(dataset.data[reached], dataset.data[u])
        owner = int(reached[np.lexsort((reached, d))[0]])
        _insert_edge_sorted(adjacency, dataset, owner, u, params.angle_degrees, params.max_degree)

    graph = NeighborGraph(node_count=n, adjacency=adjacency, max_degree=params.max_degree)
    return graph, entries
