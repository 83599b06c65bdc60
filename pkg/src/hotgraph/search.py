"""Beam search over a single graph and the two-phase search over a dual index.

The two-phase search runs a small beam over the hot graph first, reseeds the
full-graph beam from those results, and (optionally) consults a verdict model
at fixed intervals of full-phase distance computations to stop early. All pool
operations break distance ties by ascending id, so searches are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ResultList, VectorDataset, _as_query, batch_distances, k_smallest

__all__ = [
    "SearchParams",
    "SearchTrace",
    "FeatureVector",
    "FEATURE_NAMES",
    "beam_search",
    "dual_beam_search",
    "dynamic_search",
    "serve_search",
    "collect_checkpoint_trace",
    "extract_features",
    "VERDICT_CONTINUE",
    "VERDICT_TERMINATE",
]

VERDICT_CONTINUE = "continue"
VERDICT_TERMINATE = "terminate"

# Column order of the verdict-model feature schema.
FEATURE_NAMES = (
    "hotIdx_1st",
    "hotIdx_1st_div_kth",
    "fullIdx_1st",
    "fullIdx_1st_div_kth",
    "dist_count",
    "update_count",
)


@dataclass(frozen=True)
class SearchParams:
    """Query-time knobs.

    k: results requested. l: full-phase pool width. s_l: hot-phase pool width
    (defaults to l). eval_gap: full-phase distance computations between verdict
    checkpoints. add_step: extra node expansions granted after a terminate
    verdict before the search actually stops.
    """

    k: int = 10
    l: int = 100
    s_l: int | None = None
    eval_gap: int = 50
    add_step: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.l < self.k:
            raise ValueError(f"l={self.l} must be >= k={self.k}")
        if self.s_l is None:
            object.__setattr__(self, "s_l", self.l)
        if self.s_l < self.k:
            raise ValueError(f"s_l={self.s_l} must be >= k={self.k}")
        if self.eval_gap < 1:
            raise ValueError(f"eval_gap must be >= 1, got {self.eval_gap}")
        if self.add_step < 0:
            raise ValueError(f"add_step must be >= 0, got {self.add_step}")


@dataclass
class SearchTrace:
    """Instrumentation for one query.

    dist_count and update_count cover the full phase only; hot-phase work is
    reported separately in hot_dist_count. Checkpoint lists are populated only
    when a trace is collected for model training.
    """

    dist_count: int = 0
    update_count: int = 0
    hot_first: float = 0.0
    hot_kth: float = 0.0
    full_first: float = 0.0
    full_kth: float = 0.0
    terminated_early: bool = False
    checkpoints_evaluated: int = 0
    hot_dist_count: int = 0
    entry_ids: list = field(default_factory=list)
    expansions: list = field(default_factory=list)
    checkpoint_features: list = field(default_factory=list)
    checkpoint_topk: list = field(default_factory=list)
    final_topk: tuple = ()


@dataclass(frozen=True)
class FeatureVector:
    """One checkpoint's inputs to the verdict model (see FEATURE_NAMES for order)."""

    hot_first: float
    hot_first_div_kth: float
    full_first: float
    full_first_div_kth: float
    dist_count: float
    update_count: float

    def to_array(self) -> np.ndarray:
        return np.array(
            [
                self.hot_first,
                self.hot_first_div_kth,
                self.full_first,
                self.full_first_div_kth,
                self.dist_count,
                self.update_count,
            ],
            dtype=np.float64,
        )


def extract_features(trace: SearchTrace, k: int) -> FeatureVector:
    """Build a FeatureVector from the trace's current phase-boundary and pool state.

    Ratios with a zero denominator are defined as 1.0 (a zero k-th distance
    means the pool head is an exact duplicate region, so first/kth is taken
    as its limit).
    """
    hot_ratio = 1.0 if trace.hot_kth == 0.0 else trace.hot_first / trace.hot_kth
    full_ratio = 1.0 if trace.full_kth == 0.0 else trace.full_first / trace.full_kth
    return FeatureVector(
        hot_first=float(trace.hot_first),
        hot_first_div_kth=float(hot_ratio),
        full_first=float(trace.full_first),
        full_first_div_kth=float(full_ratio),
        dist_count=float(trace.dist_count),
        update_count=float(trace.update_count),
    )


def _merge_pool(pids, pd, nids, nd, cap: int):
    """Merge new (id, dist) pairs into a sorted pool, trim to cap.

    Returns the merged arrays and how many of the new entries survived the
    trim. New ids must not already be present in the pool.
    """
    ids = np.concatenate([pids, nids])
    d = np.concatenate([pd, nd])
    order = np.lexsort((ids, d))
    ids = ids[order][:cap]
    d = d[order][:cap]
    survivors = int(np.isin(nids, ids, assume_unique=False).sum())
    return ids, d, survivors


def _merge_topk(tids, td, nids, nd, k: int):
    ids = np.concatenate([tids, nids])
    d = np.concatenate([td, nd])
    order = np.lexsort((ids, d))
    return ids[order][:k], d[order][:k]


def _first_unexpanded(pool_ids, expanded) -> int:
    flags = expanded[pool_ids]
    pos = np.flatnonzero(~flags)
    return -1 if pos.size == 0 else int(pool_ids[pos[0]])


def _single_beam(adjacency, data, q, entry_ids, cap: int):
    """Best-first beam over one graph from explicit entry points.

    Returns (pool_ids, pool_d, eval_ids, eval_d, expansions, dist_count,
    update_count). Every evaluated node is recorded; dist_count includes the
    entry-point evaluations.
    """
    n = len(adjacency)
    evaluated = np.zeros(n, dtype=bool)
    expanded = np.zeros(n, dtype=bool)
    seeds = np.unique(np.asarray(entry_ids, dtype=np.int64))
    seed_d = batch_distances(data[seeds], q)
    evaluated[seeds] = True
    dist_count = int(seeds.size)
    update_count = 0
    order = np.lexsort((seeds, seed_d))
    pool_ids = seeds[order][:cap]
    pool_d = seed_d[order][:cap]
    eval_chunks_i = [seeds]
    eval_chunks_d = [seed_d]
    expansions: list[int] = []

    while True:
        p = _first_unexpanded(pool_ids, expanded)
        if p < 0:
            break
        expanded[p] = True
        expansions.append(p)
        nbrs = adjacency[p]
        fresh = nbrs[~evaluated[nbrs]].astype(np.int64)
        if fresh.size == 0:
            continue
        fd = batch_distances(data[fresh], q)
        evaluated[fresh] = True
        dist_count += int(fresh.size)
        eval_chunks_i.append(fresh)
        eval_chunks_d.append(fd)
        pool_ids, pool_d, survived = _merge_pool(pool_ids, pool_d, fresh, fd, cap)
        update_count += survived

    eval_ids = np.concatenate(eval_chunks_i)
    eval_d = np.concatenate(eval_chunks_d)
    return pool_ids, pool_d, eval_ids, eval_d, expansions, dist_count, update_count


def beam_search(graph, entry_points, dataset: VectorDataset, q, k: int, l: int):
    """Plain beam search over one graph. Returns (ResultList, SearchTrace).

    The pool is seeded with the entry points; the closest unexpanded pool
    member is expanded until none remain; the k closest evaluated nodes are
    returned. The trace records every expansion in order, so the distance
    count can be replayed from the graph.
    """
    if graph.node_count != dataset.count:
        raise ValueError("graph and dataset node counts differ")
    if l < k or k < 1:
        raise ValueError(f"need l >= k >= 1, got k={k} l={l}")
    entry = list(entry_points)
    if not entry:
        raise ValueError("entry_points must be non-empty")
    if min(entry) < 0 or max(entry) >= graph.node_count:
        raise ValueError("entry point id out of range")
    q = _as_query(q, dataset.dim)

    pool_ids, pool_d, eval_ids, eval_d, expansions, dist_count, update_count = _single_beam(
        graph.adjacency, dataset.data, q, entry, l
    )
    ids, d = k_smallest(eval_ids, eval_d, k)
    trace = SearchTrace(
        dist_count=dist_count,
        update_count=update_count,
        full_first=float(pool_d[0]),
        full_kth=float(pool_d[min(k, pool_d.size) - 1]),
        entry_ids=sorted(set(int(e) for e in entry)),
        expansions=expansions,
    )
    trace.final_topk = tuple(np.sort(ids).tolist())
    return ResultList(ids, d), trace


def _hot_phase(index, q, params: SearchParams):
    """Beam over the hot graph; results mapped back to global ids."""
    hot = index.hot
    if hot is None or hot.members.size == 0:
        raise ValueError("dual index has no hot graph; build and publish one first")
    pool_ids, pool_d, eval_ids, eval_d, _, dist_count, _ = _single_beam(
        hot.graph.adjacency,
        hot.subset.data,
        q,
        hot.local_entry_points,
        params.s_l,
    )
    g_pool = hot.members[pool_ids]
    g_eval = hot.members[eval_ids]
    return g_pool, pool_d, g_eval, eval_d, dist_count


def _two_phase(index, dataset: VectorDataset, q, params: SearchParams, judge, record: bool):
    """Shared engine behind dual_beam_search / dynamic_search / trace collection.

    judge: callable(FeatureVector) -> verdict string, or None to never stop
    early. record: capture per-checkpoint features and top-k snapshots (adds a
    terminal checkpoint when the pool exhausts naturally).
    """
    if dataset.count != index.full_graph.node_count:
        raise ValueError("dataset does not match the index")
    q = _as_query(q, dataset.dim)
    k, l = params.k, params.l
    trace = SearchTrace()

    hp_ids, hp_d, he_ids, he_d, hot_dists = _hot_phase(index, q, params)
    trace.hot_dist_count = hot_dists
    trace.hot_first = float(hp_d[0])
    trace.hot_kth = float(hp_d[min(k, hp_d.size) - 1])

    n = dataset.count
    evaluated = np.zeros(n, dtype=bool)
    evaluated[he_ids] = True
    expanded = np.zeros(n, dtype=bool)  # hot-phase visit flags do not carry over
    adjacency = index.full_graph.adjacency
    data = dataset.data

    pool_ids = hp_ids[:l]
    pool_d = hp_d[:l]
    tk_ids, tk_d = k_smallest(he_ids, he_d, k)

    checkpoint_at = params.eval_gap
    budget = -1  # expansions left after a terminate verdict; -1 = unlimited

    while budget != 0:
        p = _first_unexpanded(pool_ids, expanded)
        if p < 0:
            break
        expanded[p] = True
        trace.expansions.append(p)
        if budget > 0:
            budget -= 1
        nbrs = adjacency[p]
        fresh = nbrs[~evaluated[nbrs]].astype(np.int64)
        if fresh.size:
            fd = batch_distances(data[fresh], q)
            evaluated[fresh] = True
            trace.dist_count += int(fresh.size)
            pool_ids, pool_d, survived = _merge_pool(pool_ids, pool_d, fresh, fd, l)
            trace.update_count += survived
            tk_ids, tk_d = _merge_topk(tk_ids, tk_d, fresh, fd, k)

        if (
            budget < 0
            and (judge is not None or record)
            and trace.dist_count >= checkpoint_at
            and pool_ids.size >= k
        ):
            while checkpoint_at <= trace.dist_count:
                checkpoint_at += params.eval_gap
            trace.full_first = float(pool_d[0])
            trace.full_kth = float(pool_d[k - 1])
            fv = extract_features(trace, k)
            if record:
                trace.checkpoint_features.append(fv)
                trace.checkpoint_topk.append(tuple(np.sort(tk_ids).tolist()))
            if judge is not None:
                trace.checkpoints_evaluated += 1
                if judge(fv) == VERDICT_TERMINATE:
                    trace.terminated_early = True
                    if params.add_step == 0:
                        break
                    budget = params.add_step

    trace.full_first = float(pool_d[0])
    trace.full_kth = float(pool_d[min(k, pool_d.size) - 1])
    trace.final_topk = tuple(np.sort(tk_ids).tolist())
    if record:
        trace.checkpoint_features.append(extract_features(trace, k))
        trace.checkpoint_topk.append(trace.final_topk)

    result = ResultList(tk_ids, tk_d)
    index.counter.record_many(tk_ids.tolist())
    return result, trace


def dual_beam_search(index, dataset: VectorDataset, q, params: SearchParams):
    """Two-phase search with no early termination: hot beam, then full beam to exhaustion."""
    return _two_phase(index, dataset, q, params, judge=None, record=False)


def serve_search(index, dataset: VectorDataset, q, params: SearchParams):
    """Serving-loop entry point: two-phase when a hot graph is published, plain beam before.

    Either way the access counter is charged with the returned ids, so a cold
    index accumulates the heat that will seed its first hot rebuild.
    """
    if index.hot is not None and index.hot.members.size:
        return dual_beam_search(index, dataset, q, params)
    res, trace = beam_search(
        index.full_graph, index.entry_points, dataset, q, params.k, params.l
    )
    index.counter.record_many(res.ids.tolist())
    return res, trace


def dynamic_search(index, dataset: VectorDataset, q, params: SearchParams, tree):
    """Two-phase search gated by a verdict model.

    Every ``eval_gap`` full-phase distance computations the model is shown the
    current FeatureVector; on a terminate verdict the search stops after
    ``add_step`` further expansions. Results are the k closest nodes evaluated
    in either phase, and the access counter is charged for each returned id.
    """
    from .decision_tree import predict  # local import to avoid a module cycle

    if tree is None or not getattr(tree, "nodes", None):
        raise ValueError("dynamic_search requires a trained verdict model")
    return _two_phase(index, dataset, q, params, judge=lambda fv: predict(tree, fv), record=False)


def collect_checkpoint_trace(index, dataset: VectorDataset, q, params: SearchParams):
    """Run the two-phase search to exhaustion, recording every checkpoint.

    Used to build training data: the trace carries one FeatureVector and one
    top-k snapshot per checkpoint, plus a terminal checkpoint taken when the
    pool is exhausted.
    """
    return _two_phase(index, dataset, q, params, judge=None, record=True)
