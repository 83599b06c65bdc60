"""Stop-or-continue judge: a small CART tree over search checkpoint features.

Labels come from replaying searches to exhaustion: a checkpoint is labeled
"continue" iff its running top-k still differs from the final top-k. Training
reweights classes by inverse frequency so rare verdicts are not drowned out.

Trees serialize to JSON with nodes in preorder; training is deterministic,
so retraining on identical inputs reproduces the file byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import VectorDataset
from .search import (
    FEATURE_NAMES,
    VERDICT_CONTINUE,
    VERDICT_TERMINATE,
    FeatureVector,
    SearchParams,
    collect_checkpoint_trace,
)

__all__ = [
    "LABEL_CONTINUE",
    "LABEL_TERMINATE",
    "TreeNode",
    "DecisionTree",
    "train_tree",
    "predict",
    "feature_importance",
    "constant_tree",
    "save_tree",
    "load_tree",
    "tree_to_json",
    "tree_from_json",
    "TrainingTrace",
    "collect_training_traces",
    "generate_training_data",
    "samples_from_traces",
    "save_training_csv",
]

LABEL_CONTINUE = 1
LABEL_TERMINATE = 0

_FORMAT_NAME = "hotgraph-tree"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TreeNode:
    """One node. Leaves carry a verdict plus the training class counts that
    produced it; internal nodes split on feature <= threshold."""

    feature: int = -1
    threshold: float = 0.0
    left: int = -1
    right: int = -1
    verdict: str | None = None
    count_continue: int = 0
    count_terminate: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.verdict is not None


@dataclass(frozen=True)
class DecisionTree:
    nodes: tuple
    feature_names: tuple = FEATURE_NAMES
    importances: tuple = field(default=tuple(0.0 for _ in FEATURE_NAMES))
    max_depth: int = 0
    train_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "importances", tuple(float(v) for v in self.importances))
        if not self.nodes:
            raise ValueError("tree must contain at least one node")
        if len(self.importances) != len(self.feature_names):
            raise ValueError("importances length must match feature_names")
        n = len(self.nodes)
        child_seen = [False] * n
        for i, node in enumerate(self.nodes):
            if node.is_leaf:
                if node.verdict not in (VERDICT_CONTINUE, VERDICT_TERMINATE):
                    raise ValueError(f"node {i}: unknown verdict {node.verdict!r}")
            else:
                if not (0 <= node.feature < len(self.feature_names)):
                    raise ValueError(f"node {i}: feature index {node.feature} out of range")
                if not np.isfinite(node.threshold):
                    raise ValueError(f"node {i}: non-finite threshold")
                # preorder layout: children always come after their parent
                if not (i < node.left < n and i < node.right < n):
                    raise ValueError(f"node {i}: child index out of range")
                for c in (node.left, node.right):
                    if child_seen[c]:
                        raise ValueError(f"node {c} is claimed by two parents")
                    child_seen[c] = True
        orphans = [i for i in range(1, n) if not child_seen[i]]
        if orphans:
            raise ValueError(f"unreachable nodes: {orphans[:5]}")
        if self.depth > self.max_depth:
            raise ValueError(f"tree depth {self.depth} exceeds declared max_depth {self.max_depth}")

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def leaf_count(self) -> int:
        return sum(1 for node in self.nodes if node.is_leaf)

    @property
    def depth(self) -> int:
        depths = [0] * len(self.nodes)
        best = 0
        for i, node in enumerate(self.nodes):
            if node.is_leaf:
                best = max(best, depths[i])
            else:
                depths[node.left] = depths[i] + 1
                depths[node.right] = depths[i] + 1
        return best


def _gini(w_pos: float, w_neg: float) -> float:
    total = w_pos + w_neg
    if total <= 0.0:
        return 0.0
    p = w_pos / total
    q = w_neg / total
    return 1.0 - p * p - q * q


def _best_split(x: np.ndarray, wpos: np.ndarray, wneg: np.ndarray, min_leaf: int):
    """Best threshold for one feature, or None.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values. Returns (weighted child impurity, threshold); on impurity ties the
    lowest threshold wins because candidates are scanned in ascending order.
    """
    order = np.argsort(x, kind="stable")
    xs = x[order]
    cpos = np.cumsum(wpos[order])
    cneg = np.cumsum(wneg[order])
    total_pos = cpos[-1]
    total_neg = cneg[-1]
    total = total_pos + total_neg

    cut = np.nonzero(xs[:-1] < xs[1:])[0]
    if cut.size == 0:
        return None
    n = xs.size
    left_count = cut + 1
    ok = (left_count >= min_leaf) & (n - left_count >= min_leaf)
    cut = cut[ok]
    if cut.size == 0:
        return None

    lp = cpos[cut]
    ln = cneg[cut]
    rp = total_pos - lp
    rn = total_neg - ln
    wl = lp + ln
    wr = rp + rn
    gini_l = np.where(wl > 0, 1.0 - (lp / np.maximum(wl, 1e-300)) ** 2 - (ln / np.maximum(wl, 1e-300)) ** 2, 0.0)
    gini_r = np.where(wr > 0, 1.0 - (rp / np.maximum(wr, 1e-300)) ** 2 - (rn / np.maximum(wr, 1e-300)) ** 2, 0.0)
    child = (wl * gini_l + wr * gini_r) / total

    best = int(np.argmin(child))  # first minimum: lowest threshold
    threshold = 0.5 * (xs[cut[best]] + xs[cut[best] + 1])
    return float(child[best]), float(threshold)


def train_tree(
    features: np.ndarray,
    labels: np.ndarray,
    max_depth: int = 10,
    min_leaf: int = 20,
    feature_names=FEATURE_NAMES,
    seed: int = 0,
) -> DecisionTree:
    """Fit a binary CART on checkpoint features.

    ``labels`` holds LABEL_CONTINUE / LABEL_TERMINATE per row. Classes are
    weighted by inverse frequency. A node splits only when some (feature,
    threshold) strictly lowers weighted Gini impurity and leaves at least
    ``min_leaf`` samples on each side; features are scanned in ascending
    index order, so impurity ties resolve to the lowest feature index and
    then the lowest threshold. ``seed`` is recorded in the tree file as
    bookkeeping; the tie rules make training fully deterministic, so it is
    never consulted.
    """
    X = np.ascontiguousarray(np.asarray(features, dtype=np.float64))
    y = np.asarray(labels).astype(np.int64).ravel()
    if X.ndim != 2 or X.shape[1] != len(feature_names):
        raise ValueError(f"features must be 2-D with {len(feature_names)} columns")
    if y.shape[0] != X.shape[0]:
        raise ValueError("features and labels disagree on sample count")
    if X.shape[0] == 0:
        raise ValueError("cannot train on an empty sample set")
    if not np.all(np.isfinite(X)):
        raise ValueError("features contain non-finite values")
    bad = ~np.isin(y, (LABEL_CONTINUE, LABEL_TERMINATE))
    if np.any(bad):
        raise ValueError(f"labels must be 0 or 1; found {y[bad][0]}")
    if max_depth < 0:
        raise ValueError(f"max_depth must be >= 0, got {max_depth}")
    if min_leaf < 1:
        raise ValueError(f"min_leaf must be >= 1, got {min_leaf}")

    n = X.shape[0]
    n_cont = int(np.sum(y == LABEL_CONTINUE))
    n_term = n - n_cont
    # inverse-frequency class weights: n / (2 * class count); absent class unused
    w_cont = n / (2.0 * n_cont) if n_cont else 0.0
    w_term = n / (2.0 * n_term) if n_term else 0.0
    sample_w = np.where(y == LABEL_CONTINUE, w_cont, w_term)
    wpos_all = np.where(y == LABEL_CONTINUE, sample_w, 0.0)
    wneg_all = np.where(y == LABEL_CONTINUE, 0.0, sample_w)
    w_total = float(sample_w.sum())

    nodes: list = []
    importance = np.zeros(len(feature_names), dtype=np.float64)

    def make_leaf(idx: np.ndarray, w_pos: float, w_neg: float) -> TreeNode:
        # weighted majority; an exact tie keeps searching (the safe verdict)
        verdict = VERDICT_CONTINUE if w_pos >= w_neg else VERDICT_TERMINATE
        return TreeNode(
            verdict=verdict,
            count_continue=int(np.sum(y[idx] == LABEL_CONTINUE)),
            count_terminate=int(np.sum(y[idx] == LABEL_TERMINATE)),
        )

    def grow(idx: np.ndarray, depth: int) -> None:
        my = len(nodes)
        nodes.append(None)
        w_pos = float(wpos_all[idx].sum())
        w_neg = float(wneg_all[idx].sum())
        parent = _gini(w_pos, w_neg)

        split = None
        if depth < max_depth and idx.size >= 2 * min_leaf and parent > 0.0:
            best_child = parent
            for f in range(len(feature_names)):
                found = _best_split(X[idx, f], wpos_all[idx], wneg_all[idx], min_leaf)
                if found is not None and found[0] < best_child:
                    best_child = found[0]
                    split = (f, found[1], found[0])
        if split is None:
            nodes[my] = make_leaf(idx, w_pos, w_neg)
            return

        f, threshold, child_imp = split
        w_node = w_pos + w_neg
        # child_imp is already normalized by the node's own weight
        importance[f] += (w_node / w_total) * (parent - child_imp)
        go_left = X[idx, f] <= threshold
        grow(idx[go_left], depth + 1)
        right_at = len(nodes)
        grow(idx[~go_left], depth + 1)
        nodes[my] = TreeNode(feature=f, threshold=threshold, left=my + 1, right=right_at)

    grow(np.arange(n, dtype=np.int64), 0)

    total_importance = float(importance.sum())
    if total_importance > 0.0:
        importance /= total_importance
    return DecisionTree(
        nodes=tuple(nodes),
        feature_names=tuple(feature_names),
        importances=tuple(float(v) for v in importance),
        max_depth=max_depth,
        train_seed=seed,
    )


def predict(tree: DecisionTree, fv: FeatureVector) -> str:
    """Walk the tree: value <= threshold goes left. Returns a verdict string."""
    arr = fv.to_array()
    node = tree.nodes[0]
    while not node.is_leaf:
        node = tree.nodes[node.left if arr[node.feature] <= node.threshold else node.right]
    return node.verdict


def feature_importance(tree: DecisionTree) -> dict:
    """Impurity-decrease importance per feature name (sums to 1 unless the tree is a stump)."""
    return {name: imp for name, imp in zip(tree.feature_names, tree.importances)}


def constant_tree(verdict: str) -> DecisionTree:
    """Single-leaf tree that always answers ``verdict``. Importances are all zero."""
    if verdict not in (VERDICT_CONTINUE, VERDICT_TERMINATE):
        raise ValueError(f"unknown verdict {verdict!r}")
    return DecisionTree(nodes=(TreeNode(verdict=verdict),))


def tree_to_json(tree: DecisionTree) -> str:
    """Deterministic JSON: preorder node list, sorted keys, no whitespace drift."""
    encoded = []
    for node in tree.nodes:
        if node.is_leaf:
            encoded.append(
                {
                    "verdict": node.verdict,
                    "count_continue": node.count_continue,
                    "count_terminate": node.count_terminate,
                }
            )
        else:
            encoded.append(
                {
                    "feature": node.feature,
                    "threshold": node.threshold,
                    "left": node.left,
                    "right": node.right,
                }
            )
    payload = {
        "format": _FORMAT_NAME,
        "version": _FORMAT_VERSION,
        "features": list(tree.feature_names),
        "importances": list(tree.importances),
        "max_depth": tree.max_depth,
        "train_seed": tree.train_seed,
        "nodes": encoded,
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"


def tree_from_json(text: str) -> DecisionTree:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"not valid tree JSON: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != _FORMAT_NAME:
        raise ValueError("not a judge-tree file (missing format marker)")
    if payload.get("version") != _FORMAT_VERSION:
        raise ValueError(f"unsupported tree version {payload.get('version')!r}")
    names = tuple(payload.get("features", ()))
    if names != tuple(FEATURE_NAMES):
        raise ValueError("tree feature names do not match this build")
    nodes = []
    for i, raw in enumerate(payload.get("nodes", ())):
        if "verdict" in raw:
            nodes.append(
                TreeNode(
                    verdict=raw["verdict"],
                    count_continue=int(raw.get("count_continue", 0)),
                    count_terminate=int(raw.get("count_terminate", 0)),
                )
            )
        else:
            try:
                nodes.append(
                    TreeNode(
                        feature=int(raw["feature"]),
                        threshold=float(raw["threshold"]),
                        left=int(raw["left"]),
                        right=int(raw["right"]),
                    )
                )
            except KeyError as exc:
                raise ValueError(f"node {i} is missing key {exc}") from exc
    importances = payload.get("importances", [0.0] * len(names))
    return DecisionTree(
        nodes=tuple(nodes),
        feature_names=names,
        importances=tuple(importances),
        max_depth=int(payload.get("max_depth", 0)),
        train_seed=int(payload.get("train_seed", 0)),
    )


def save_tree(tree: DecisionTree, path) -> None:
    Path(path).write_text(tree_to_json(tree), encoding="utf-8")


def load_tree(path) -> DecisionTree:
    return tree_from_json(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class TrainingTrace:
    """All checkpoints of one exhausted search, labeled against its final answer.

    Per checkpoint, parallel to ``features``: the verdict label, the fraction
    of the final top-k already present (self-relative recall), and the total
    distance computations spent so far including the hot phase.
    """

    query_index: int
    features: tuple
    labels: tuple  # LABEL_CONTINUE / LABEL_TERMINATE per checkpoint
    recalls: tuple = ()
    total_dist_counts: tuple = ()


def collect_training_traces(index, dataset: VectorDataset, queries: VectorDataset, params: SearchParams):
    """Run every distinct query to exhaustion and label its checkpoints.

    Duplicate query vectors (exact equality) are dropped, keeping the first
    occurrence, so repeated queries cannot dominate the training set. Each
    checkpoint is labeled "continue" iff its running top-k set still differs
    from the search's final top-k set; the trailing checkpoint taken at
    exhaustion therefore always contributes a "terminate" example.
    """
    _, first = np.unique(queries.data, axis=0, return_index=True)
    keep = np.sort(first)
    traces = []
    for qi in keep:
        _, trace = collect_checkpoint_trace(index, dataset, queries.data[qi], params)
        final = set(trace.final_topk)
        feats = tuple(trace.checkpoint_features)
        labels = tuple(
            LABEL_CONTINUE if topk != trace.final_topk else LABEL_TERMINATE
            for topk in trace.checkpoint_topk
        )
        recalls = tuple(
            len(final & set(topk)) / max(1, len(final)) for topk in trace.checkpoint_topk
        )
        totals = tuple(int(trace.hot_dist_count + fv.dist_count) for fv in feats)
        traces.append(
            TrainingTrace(
                query_index=int(qi),
                features=feats,
                labels=labels,
                recalls=recalls,
                total_dist_counts=totals,
            )
        )
    return traces


def save_training_csv(traces, path) -> None:
    """Write one row per checkpoint: query id, the six features, label, cost, recall."""
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["query_id", *FEATURE_NAMES, "label", "dist_count_total", "recall"])
        for tr in traces:
            for fv, label, total, recall in zip(
                tr.features, tr.labels, tr.total_dist_counts, tr.recalls
            ):
                writer.writerow(
                    [
                        tr.query_index,
                        *(f"{v:.9g}" for v in fv.to_array()),
                        VERDICT_CONTINUE if label == LABEL_CONTINUE else VERDICT_TERMINATE,
                        total,
                        f"{recall:.6f}",
                    ]
                )


def samples_from_traces(traces):
    """Stack checkpoint features and labels from traces into (X, y) arrays."""
    rows = [fv.to_array() for tr in traces for fv in tr.features]
    labels = [lab for tr in traces for lab in tr.labels]
    if not rows:
        raise ValueError("no checkpoints were produced; widen eval_gap or check queries")
    X = np.vstack(rows).astype(np.float64)
    y = np.asarray(labels, dtype=np.int8)
    return X, y


def generate_training_data(index, dataset: VectorDataset, queries: VectorDataset, params: SearchParams):
    """Run the queries and stack their checkpoints into (X, y) for train_tree."""
    return samples_from_traces(collect_training_traces(index, dataset, queries, params))
