"""Look inside the stop-or-continue tree.

Trains a small tree on labeled search checkpoints, prints its structure and
feature importances, then replays one query and shows the verdict the tree
would give at each checkpoint next to what exhaustive search eventually
found. The features are cheap by construction: pool-head distances, their
ratio to the k-th best, and the running work counters.
"""

import numpy as np

from hotgraph import (
    FEATURE_NAMES,
    BuildParams,
    HotIndexConfig,
    SearchParams,
    build_dual_index,
    build_hot_index,
    collect_checkpoint_trace,
    collect_training_traces,
    feature_importance,
    predict,
    publish_hot,
    samples_from_traces,
    select_hot_nodes,
    serve_search,
    synthetic_dataset,
    train_tree,
)

PARAMS = SearchParams(k=10, l=60, eval_gap=25)


def main():
    corpus = synthetic_dataset(3_000, 12, seed=2)
    build = BuildParams(knng_k=12, nn_descent_iters=5, max_degree=24, seed=0)
    config = HotIndexConfig(n_query=2_000, index_ratio=0.02, build=build)
    index = build_dual_index(corpus, config)

    rng = np.random.default_rng(0)
    heat = rng.zipf(1.4, size=3_000).clip(1, 400) - 1
    for qi in heat:
        serve_search(index, corpus, corpus.data[qi], PARAMS)
    publish_hot(index, build_hot_index(corpus, select_hot_nodes(index.counter, 60), build))

    queries = corpus.subset(np.arange(400, 700))
    traces = collect_training_traces(index, corpus, queries, PARAMS)
    X, y = samples_from_traces(traces)
    tree = train_tree(X, y, max_depth=4, min_leaf=40)
    print(f"{y.size} checkpoints from {len(traces)} searches "
          f"({int(y.sum())} continue / {int((1 - y).sum())} terminate)")
    print(f"tree: {tree.node_count} nodes, {tree.leaf_count} leaves, depth {tree.depth}\n")

    print("structure (feature <= threshold goes left):")
    _dump(tree, 0, "")

    print("\nimportance (impurity decrease, sums to 1):")
    for name, w in sorted(feature_importance(tree).items(), key=lambda kv: -kv[1]):
        bar = "#" * int(round(40 * w))
        print(f"  {name:22s} {w:6.3f} {bar}")

    q = corpus.data[801]
    _, trace = collect_checkpoint_trace(index, corpus, q, PARAMS)
    final = set(trace.final_topk)
    print(f"\nreplaying one query to exhaustion ({len(trace.checkpoint_features)} checkpoints):")
    print(f"{'dists':>6s} {'have k of 10':>13s} {'tree says':>10s}")
    for fv, topk in zip(trace.checkpoint_features, trace.checkpoint_topk):
        have = len(final & set(topk))
        print(f"{int(fv.dist_count):>6d} {have:>13d} {predict(tree, fv):>10s}")
    print("\na good tree flips to terminate once the running top-k stops changing")


def _dump(tree, at, indent):
    node = tree.nodes[at]
    if node.is_leaf:
        total = node.count_continue + node.count_terminate
        print(f"{indent}-> {node.verdict} ({node.count_continue}/{total} continue)")
        return
    print(f"{indent}{FEATURE_NAMES[node.feature]} <= {node.threshold:.4g}?")
    _dump(tree, node.left, indent + "  ")
    _dump(tree, node.right, indent + "  ")


if __name__ == "__main__":
    main()
