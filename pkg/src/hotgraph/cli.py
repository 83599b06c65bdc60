"""Command-line harness: gen-data, build, train-tree, bench, analyze.

The verbs compose into a pipeline over one data directory:

    hotgraph gen-data  --out data/
    hotgraph build     --data data/ --out run/index.bin
    hotgraph train-tree --data data/ --index run/index.bin --out run/tree.json
    hotgraph bench     --data data/ --index run/index.bin --tree run/tree.json --out run/
    hotgraph analyze   --universe 1000000 --beta 1.2

Every verb accepts --config FILE holding "key = value" lines (keys are the
long flag names); explicit flags override the file. Deterministic artifacts
(index, tree, bench.csv, qresults.jsonl) never contain timings or paths;
wall-clock numbers go to stdout, the index meta file, and bench_timing.csv.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .core import (
    VectorDataset,
    dataset_digest,
    load_fvecs,
    load_ivecs,
    recall_at_k,
    synthetic_dataset,
    write_fvecs,
    write_ivecs,
)
from .decision_tree import (
    collect_training_traces,
    feature_importance,
    load_tree,
    samples_from_traces,
    save_training_csv,
    save_tree,
    train_tree,
)
from .graph_build import BuildParams
from .hot_index import (
    AccessCounter,
    DualIndex,
    HotIndexConfig,
    build_dual_index,
    build_hot_index,
    publish_hot,
    refresh_hot_if_due,
    select_hot_nodes,
)
from .search import SearchParams, beam_search, dual_beam_search, dynamic_search, serve_search
from .storage import index_segment_sizes, load_index, save_index
from .workload import (
    WorkloadSpec,
    build_workload,
    exact_miss_probability,
    expected_search_cost,
    grid_optimal_index_ratio,
    load_manifest,
    miss_probability,
    optimal_index_ratio,
    save_manifest,
    workload_manifest,
)

BASE_FILE = "base.fvecs"
POOL_FILE = "pool.fvecs"
HISTORY_FILE = "history.ivecs"
EVAL_FILE = "eval.ivecs"
TRUTH_FILE = "truth.ivecs"
MANIFEST_FILE = "manifest.json"

_SWEEP_DEFAULTS = {
    "ir": "0.001,0.005,0.01,0.05,0.1",
    "k": "1,5,10,20,50",
    "eval-gap": "10,25,50,100,200",
    "add-step": "0,5,10,20,50",
    "depth": "2,4,6,8,10",
    "none": "",
}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _load_config_file(path: str) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, val = line.split("=", 1)
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def _config_path_from_argv(argv) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config_defaults(sub: argparse.ArgumentParser, values: dict) -> None:
    """Config file supplies defaults; explicit flags still win at parse time."""
    by_dest = {a.dest: a for a in sub._actions}
    converted = {}
    for key, raw in values.items():
        action = by_dest.get(key)
        if action is None:
            raise ValueError(f"unknown config key {key!r}")
        if isinstance(action.const, bool):
            converted[key] = _parse_bool(raw)
        elif action.type is not None:
            converted[key] = action.type(raw)
        else:
            converted[key] = raw
    sub.set_defaults(**converted)


def _csv_floats(text: str):
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _csv_ints(text: str):
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _fmt(value, digits: int = 6) -> str:
    return f"{value:.{digits}f}"


# ---------------------------------------------------------------- gen-data


def cmd_gen_data(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataset = synthetic_dataset(
        args.count, args.dim, clusters=args.clusters, seed=args.data_seed
    )
    spec = WorkloadSpec(
        beta=args.beta,
        n_history=args.n_history,
        n_eval=args.n_eval,
        truth_k=args.truth_k,
        uniform_eval=args.uniform_eval,
        seed=args.workload_seed,
        base_fraction=args.base_fraction,
    )
    w = build_workload(dataset, spec)
    write_fvecs(out / BASE_FILE, w.base.data)
    write_fvecs(out / POOL_FILE, w.pool.data)
    write_ivecs(out / HISTORY_FILE, w.history.reshape(1, -1))
    write_ivecs(out / EVAL_FILE, w.eval_stream.reshape(1, -1))
    write_ivecs(out / TRUTH_FILE, w.truth_ids)
    save_manifest(workload_manifest(w), out / MANIFEST_FILE)
    print(f"base vectors:  {w.base.count} x {w.base.dim}")
    print(f"pool vectors:  {w.pool.count} x {w.pool.dim}")
    print(f"history draws: {w.history.size} (beta={spec.beta})")
    print(f"eval draws:    {w.eval_stream.size}{' uniform' if spec.uniform_eval else ''}")
    print(f"ground truth:  top-{spec.truth_k} per pool vector")
    print(f"wrote {out / MANIFEST_FILE}")
    return 0


# ---------------------------------------------------------------- data dir


def _read_stream(path: Path) -> np.ndarray:
    rows = load_ivecs(path)
    return rows.reshape(-1).astype(np.int64)


def _load_data_dir(data_dir: str, need_truth: bool = False):
    d = Path(data_dir)
    base = load_fvecs(d / BASE_FILE)
    pool = load_fvecs(d / POOL_FILE)
    manifest = load_manifest(d / MANIFEST_FILE)
    if manifest["base_digest"] != dataset_digest(base).hex():
        raise ValueError(f"{d / BASE_FILE}: content does not match the manifest digest")
    if manifest["pool_digest"] != dataset_digest(pool).hex():
        raise ValueError(f"{d / POOL_FILE}: content does not match the manifest digest")
    history = _read_stream(d / HISTORY_FILE)
    eval_stream = _read_stream(d / EVAL_FILE)
    truth = None
    if need_truth:
        truth = load_ivecs(d / TRUTH_FILE).astype(np.int64)
        if truth.shape[0] != pool.count:
            raise ValueError(f"{d / TRUTH_FILE}: {truth.shape[0]} rows for {pool.count} pool vectors")
    for name, stream in (("history", history), ("eval", eval_stream)):
        if stream.size and (stream.min() < 0 or stream.max() >= pool.count):
            raise ValueError(f"{name} stream references pool ids out of range")
    return base, pool, history, eval_stream, truth, manifest


# ---------------------------------------------------------------- build


def cmd_build(args) -> int:
    base, pool, history, _, _, _ = _load_data_dir(args.data)
    build = BuildParams(
        knng_k=args.knng_k,
        nn_descent_iters=args.nn_descent_iters,
        angle_degrees=args.angle,
        max_degree=args.max_degree,
        seed=args.build_seed,
    )
    config = HotIndexConfig(n_query=args.n_query, index_ratio=args.index_ratio, build=build)

    t0 = time.perf_counter()
    index = build_dual_index(base, config)
    full_seconds = time.perf_counter() - t0
    print(f"full graph: {base.count} nodes, built in {full_seconds:.2f}s")

    params = SearchParams(k=args.k, l=args.l)
    rebuilds = 0
    hot_seconds = 0.0
    for qi in history:
        serve_search(index, base, pool.data[qi], params)
        t1 = time.perf_counter()
        if refresh_hot_if_due(index, base):
            hot_seconds = time.perf_counter() - t1
            rebuilds += 1
    if index.hot is None:
        n_idx = config.hot_size(base.count)
        hot_ids = select_hot_nodes(index.counter, n_idx)
        t1 = time.perf_counter()
        hot = build_hot_index(base, hot_ids, build)
        hot_seconds = time.perf_counter() - t1
        publish_hot(index, hot)
        rebuilds += 1
    print(
        f"hot graph: {index.hot.members.size} nodes "
        f"({rebuilds} rebuild(s) over {history.size} history queries, last in {hot_seconds:.2f}s)"
    )

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_index(index, base, out)
    sizes = index_segment_sizes(index)
    meta = {
        "full_build_seconds": full_seconds,
        "hot_build_seconds": hot_seconds,
        "hot_rebuilds": rebuilds,
        "full_graph_bytes": sizes["full_graph_bytes"],
        "hot_graph_bytes": sizes["hot_graph_bytes"],
    }
    meta_path = Path(str(out) + ".meta.json")
    meta_path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(
        f"adjacency bytes: full={sizes['full_graph_bytes']} hot={sizes['hot_graph_bytes']} "
        f"({100.0 * sizes['hot_graph_bytes'] / max(1, sizes['full_graph_bytes']):.2f}%)"
    )
    print(f"wrote {out} and {meta_path}")
    return 0


# ---------------------------------------------------------------- train-tree


def _distinct_history_queries(history: np.ndarray, cap: int) -> np.ndarray:
    _, first = np.unique(history, return_index=True)
    ordered = history[np.sort(first)]
    return ordered[:cap] if cap > 0 else ordered


def cmd_train_tree(args) -> int:
    base, pool, history, _, _, _ = _load_data_dir(args.data)
    index = load_index(args.index, base)
    if index.hot is None:
        raise ValueError("index has no hot tier; run the build verb first")
    params = SearchParams(
        k=args.k,
        l=args.l,
        s_l=args.s_l if args.s_l > 0 else None,
        eval_gap=args.eval_gap,
    )
    qids = _distinct_history_queries(history, args.train_queries)
    queries = pool.subset(qids)
    traces = collect_training_traces(index, base, queries, params)
    X, y = samples_from_traces(traces)
    n_cont = int(np.sum(y == 1))
    print(
        f"training checkpoints: {y.size} from {len(traces)} distinct queries "
        f"({n_cont} continue / {y.size - n_cont} terminate)"
    )
    tree = train_tree(
        X, y, max_depth=args.max_depth, min_leaf=args.min_leaf, seed=args.tree_seed
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_tree(tree, out)
    if args.dump_samples:
        save_training_csv(traces, args.dump_samples)
        print(f"wrote {args.dump_samples}")
    print(f"tree: {tree.node_count} nodes, {tree.leaf_count} leaves, depth {tree.depth}")
    print("feature importance:")
    for name, weight in feature_importance(tree).items():
        print(f"  {name:22s} {weight:.4f}")
    print(f"wrote {out}")
    return 0


# ---------------------------------------------------------------- bench


def _bench_one_mode(mode, index, base, queries, params, tree, truth, k):
    """Run every query in one mode; returns (per-query records, wall seconds)."""
    records = []
    t0 = time.perf_counter()
    for qi, q in queries:
        if mode == "dynamic":
            res, trace = dynamic_search(index, base, q, params, tree)
        elif mode == "dual_beam":
            res, trace = dual_beam_search(index, base, q, params)
        elif mode == "full_beam":
            res, trace = beam_search(
                index.full_graph, index.entry_points, base, q, params.k, params.l
            )
        else:
            raise ValueError(f"unknown mode {mode}")
        hit = len(np.intersect1d(res.ids, truth[qi][:k])) / k
        records.append(
            {
                "query": int(qi),
                "recall": hit,
                "dist_count": int(trace.dist_count),
                "hot_dist_count": int(trace.hot_dist_count),
                "update_count": int(trace.update_count),
                "terminated": bool(trace.terminated_early),
                "checkpoints": int(trace.checkpoints_evaluated),
            }
        )
    wall = time.perf_counter() - t0
    return records, wall


def _mean(records, key) -> float:
    return float(np.mean([r[key] for r in records])) if records else 0.0


def cmd_bench(args) -> int:
    base, pool, history, eval_stream, truth, manifest = _load_data_dir(args.data, need_truth=True)
    index = load_index(args.index, base)
    if index.hot is None:
        raise ValueError("index has no hot tier; run the build verb first")
    tree = load_tree(args.tree)

    if args.limit > 0:
        eval_stream = eval_stream[: args.limit]
    queries = [(int(qi), pool.data[qi]) for qi in eval_stream]

    sweep = args.sweep
    values_text = args.values if args.values else _SWEEP_DEFAULTS[sweep]
    if sweep == "none":
        values = [None]
    elif sweep == "ir":
        values = _csv_floats(values_text)
    else:
        values = _csv_ints(values_text)
    if not values:
        raise ValueError("no sweep values given")

    base_params = SearchParams(
        k=args.k,
        l=args.l,
        s_l=args.s_l if args.s_l > 0 else None,
        eval_gap=args.eval_gap,
        add_step=args.add_step,
    )
    if base_params.k > truth.shape[1]:
        raise ValueError(f"k={base_params.k} exceeds stored ground-truth depth {truth.shape[1]}")

    depth_samples = None
    if sweep == "depth":
        qids = _distinct_history_queries(history, args.train_queries)
        traces = collect_training_traces(index, base, pool.subset(qids), base_params)
        depth_samples = samples_from_traces(traces)

    meta_path = Path(str(args.index) + ".meta.json")
    build_meta = {}
    if meta_path.exists():
        build_meta = json.loads(meta_path.read_text(encoding="utf-8"))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    bench_rows = []
    timing_rows = []
    qresult_lines = []

    for value in values:
        params = base_params
        row_index = index
        row_tree = tree
        if sweep == "k":
            if value > base_params.l:
                raise ValueError(f"swept k={value} exceeds l={base_params.l}")
            if value > truth.shape[1]:
                raise ValueError(f"swept k={value} exceeds ground-truth depth {truth.shape[1]}")
            params = replace(base_params, k=value, s_l=None)
        elif sweep == "eval-gap":
            params = replace(base_params, eval_gap=value)
        elif sweep == "add-step":
            params = replace(base_params, add_step=value)
        elif sweep == "ir":
            row_config = replace(index.config, index_ratio=value)
            hot_ids = select_hot_nodes(index.counter, row_config.hot_size(base.count))
            hot = build_hot_index(base, hot_ids, row_config.build)
            row_counter = AccessCounter(base.count)
            row_counter.restore(index.counter.snapshot(), index.counter.total_since_rebuild)
            row_index = DualIndex(
                full_graph=index.full_graph,
                entry_points=index.entry_points,
                counter=row_counter,
                config=row_config,
                hot=hot,
            )
        elif sweep == "depth":
            X, y = depth_samples
            row_tree = train_tree(
                X, y, max_depth=value, min_leaf=args.min_leaf, seed=args.tree_seed
            )

        k = params.k
        per_mode = {}
        walls = {}
        for mode in ("dynamic", "dual_beam", "full_beam"):
            records, wall = _bench_one_mode(
                mode, row_index, base, queries, params, row_tree, truth, k
            )
            per_mode[mode] = records
            walls[mode] = wall
            for rec in records:
                qresult_lines.append(
                    json.dumps(
                        {"sweep": sweep, "value": value, "mode": mode, **rec},
                        sort_keys=True,
                    )
                )

        dyn, dual, full = per_mode["dynamic"], per_mode["dual_beam"], per_mode["full_beam"]
        sizes = index_segment_sizes(row_index)
        dist_dyn = _mean(dyn, "dist_count")
        row = {
            "sweep": sweep,
            "value": "" if value is None else value,
            "k": params.k,
            "l": params.l,
            "s_l": params.s_l,
            "eval_gap": params.eval_gap,
            "add_step": params.add_step,
            "tree_depth": row_tree.max_depth,
            "index_ratio": row_index.config.index_ratio,
            "hot_members": int(row_index.hot.members.size),
            "n_queries": len(queries),
            "full_graph_bytes": sizes["full_graph_bytes"],
            "hot_graph_bytes": sizes["hot_graph_bytes"],
            "recall_dynamic": _fmt(_mean(dyn, "recall")),
            "dist_dynamic": _fmt(dist_dyn, 4),
            "hot_dist_dynamic": _fmt(_mean(dyn, "hot_dist_count"), 4),
            "update_dynamic": _fmt(_mean(dyn, "update_count"), 4),
            "early_stop_rate": _fmt(_mean(dyn, "terminated")),
            "checkpoints_mean": _fmt(_mean(dyn, "checkpoints"), 4),
            "recall_dual_beam": _fmt(_mean(dual, "recall")),
            "dist_dual_beam": _fmt(_mean(dual, "dist_count"), 4),
            "update_dual_beam": _fmt(_mean(dual, "update_count"), 4),
            "recall_full_beam": _fmt(_mean(full, "recall")),
            "dist_full_beam": _fmt(_mean(full, "dist_count"), 4),
            "update_full_beam": _fmt(_mean(full, "update_count"), 4),
            "dist_reduction_vs_full": _fmt(
                (_mean(full, "dist_count") / dist_dyn) if dist_dyn > 0 else 0.0, 4
            ),
            "dist_reduction_vs_dual": _fmt(
                (_mean(dual, "dist_count") / dist_dyn) if dist_dyn > 0 else 0.0, 4
            ),
        }
        bench_rows.append(row)
        timing_rows.append(
            {
                "sweep": sweep,
                "value": "" if value is None else value,
                "qps_dynamic": _fmt(len(queries) / walls["dynamic"] if walls["dynamic"] else 0.0, 2),
                "qps_dual_beam": _fmt(len(queries) / walls["dual_beam"] if walls["dual_beam"] else 0.0, 2),
                "qps_full_beam": _fmt(len(queries) / walls["full_beam"] if walls["full_beam"] else 0.0, 2),
                "wall_dynamic_s": _fmt(walls["dynamic"], 4),
                "wall_dual_beam_s": _fmt(walls["dual_beam"], 4),
                "wall_full_beam_s": _fmt(walls["full_beam"], 4),
                "full_build_s": build_meta.get("full_build_seconds", ""),
                "hot_build_s": build_meta.get("hot_build_seconds", ""),
            }
        )
        print(
            f"{sweep}={value}: recall dyn/dual/full "
            f"{row['recall_dynamic']}/{row['recall_dual_beam']}/{row['recall_full_beam']}  "
            f"dist {row['dist_dynamic']}/{row['dist_dual_beam']}/{row['dist_full_beam']}  "
            f"stop-rate {row['early_stop_rate']}"
        )

    _write_csv(out / "bench.csv", bench_rows)
    _write_csv(out / "bench_timing.csv", timing_rows)
    (out / "qresults.jsonl").write_text("\n".join(qresult_lines) + "\n", encoding="utf-8")
    print(f"wrote {out / 'bench.csv'}, {out / 'bench_timing.csv'}, {out / 'qresults.jsonl'}")
    return 0


def _write_csv(path: Path, rows) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


# ---------------------------------------------------------------- analyze


def cmd_analyze(args) -> int:
    n = args.universe
    beta = args.beta
    if beta <= 1.0:
        raise ValueError(f"the cost model needs beta > 1, got {beta}")
    ratios = _csv_floats(args.ratios) if args.ratios else [0.001, 0.002, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0]
    rows = []
    print(f"universe n={n}, beta={beta} (natural log)")
    print(f"{'IR':>10s} {'p_model':>10s} {'p_exact':>10s} {'|diff|':>10s} {'cost':>10s}")
    for r in ratios:
        p_model = miss_probability(r, n, beta)
        p_exact = exact_miss_probability(r, n, beta)
        cost = expected_search_cost(r, n, beta)
        rows.append(
            {
                "index_ratio": r,
                "miss_model": p_model,
                "miss_exact": p_exact,
                "abs_diff": abs(p_model - p_exact),
                "cost": cost,
            }
        )
        print(
            f"{r:>10.6g} {p_model:>10.6f} {p_exact:>10.6f} "
            f"{abs(p_model - p_exact):>10.6f} {cost:>10.6f}"
        )
    best = optimal_index_ratio(n, beta)
    grid_best = grid_optimal_index_ratio(n, beta, points=args.points)
    step = math.exp(math.log(n) / (args.points - 1))
    agree = max(best, grid_best) / min(best, grid_best) <= step
    print(f"closed-form optimal IR: {best:.8g}  (cost {expected_search_cost(min(best, 1.0), n, beta):.6f})")
    print(f"grid argmin ({args.points} points): {grid_best:.8g}  within one step: {'yes' if agree else 'no'}")
    if args.out:
        report = {
            "universe": n,
            "beta": beta,
            "rows": rows,
            "optimal_index_ratio": best,
            "grid_argmin": grid_best,
            "grid_points": args.points,
            "grid_agreement": bool(agree),
        }
        Path(args.out).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------- parser


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hotgraph",
        description="Dual-layer graph index for skewed nearest-neighbor workloads.",
    )
    subs = parser.add_subparsers(dest="verb", required=True)
    registry = {}

    def sub(name, func, help_text):
        p = subs.add_parser(name, help=help_text)
        p.add_argument("--config", type=str, default=None, help="key = value defaults file")
        p.set_defaults(func=func)
        registry[name] = p
        return p

    g = sub("gen-data", cmd_gen_data, "synthesize a corpus, query streams, and ground truth")
    g.add_argument("--out", type=str, required=True, help="output directory")
    g.add_argument("--count", type=int, default=10_000, help="total vectors before the split")
    g.add_argument("--dim", type=int, default=16)
    g.add_argument("--clusters", type=int, default=1)
    g.add_argument("--data-seed", type=int, default=0)
    g.add_argument("--beta", type=float, default=1.2, help="Zipf skew of the query stream")
    g.add_argument("--n-history", type=int, default=20_000)
    g.add_argument("--n-eval", type=int, default=1_000)
    g.add_argument("--truth-k", type=int, default=100)
    g.add_argument("--uniform-eval", action="store_true", help="draw eval queries uniformly")
    g.add_argument("--workload-seed", type=int, default=0)
    g.add_argument("--base-fraction", type=float, default=0.9)

    b = sub("build", cmd_build, "build the full graph, heat it on history, publish the hot tier")
    b.add_argument("--data", type=str, required=True, help="gen-data output directory")
    b.add_argument("--out", type=str, required=True, help="index file to write")
    b.add_argument("--knng-k", type=int, default=100)
    b.add_argument("--nn-descent-iters", type=int, default=8)
    b.add_argument("--angle", type=float, default=60.0)
    b.add_argument("--max-degree", type=int, default=50)
    b.add_argument("--build-seed", type=int, default=0)
    b.add_argument("--n-query", type=int, default=10_000, help="access volume between hot rebuilds")
    b.add_argument("--index-ratio", type=float, default=0.01)
    b.add_argument("--k", type=int, default=10, help="k used while replaying history")
    b.add_argument("--l", type=int, default=100, help="pool width used while replaying history")

    t = sub("train-tree", cmd_train_tree, "label checkpoints from history and fit the verdict tree")
    t.add_argument("--data", type=str, required=True)
    t.add_argument("--index", type=str, required=True)
    t.add_argument("--out", type=str, required=True, help="tree JSON file to write")
    t.add_argument("--k", type=int, default=10)
    t.add_argument("--l", type=int, default=100)
    t.add_argument("--s-l", type=int, default=0, help="hot pool width; 0 means same as --l")
    t.add_argument("--eval-gap", type=int, default=50)
    t.add_argument("--train-queries", type=int, default=0, help="cap distinct queries; 0 = all")
    t.add_argument("--max-depth", type=int, default=10)
    t.add_argument("--min-leaf", type=int, default=20)
    t.add_argument("--tree-seed", type=int, default=0)
    t.add_argument("--dump-samples", type=str, default=None, help="also write the labeled checkpoint CSV here")

    e = sub("bench", cmd_bench, "sweep one axis and emit per-setting CSV rows for all modes")
    e.add_argument("--data", type=str, required=True)
    e.add_argument("--index", type=str, required=True)
    e.add_argument("--tree", type=str, required=True)
    e.add_argument("--out", type=str, required=True, help="directory for bench artifacts")
    e.add_argument("--k", type=int, default=10)
    e.add_argument("--l", type=int, default=100)
    e.add_argument("--s-l", type=int, default=0, help="hot pool width; 0 means same as --l")
    e.add_argument("--eval-gap", type=int, default=50)
    e.add_argument("--add-step", type=int, default=0)
    e.add_argument("--sweep", choices=sorted(_SWEEP_DEFAULTS), default="ir")
    e.add_argument("--values", type=str, default=None, help="comma-separated sweep values")
    e.add_argument("--limit", type=int, default=0, help="cap eval queries; 0 = all")
    e.add_argument("--train-queries", type=int, default=0, help="depth sweep: cap training queries")
    e.add_argument("--min-leaf", type=int, default=20, help="depth sweep: retraining min leaf")
    e.add_argument("--tree-seed", type=int, default=0, help="depth sweep: retraining seed")

    a = sub("analyze", cmd_analyze, "evaluate the hot-tier sizing model")
    a.add_argument("--universe", type=int, required=True, help="corpus size n")
    a.add_argument("--beta", type=float, default=1.2)
    a.add_argument("--ratios", type=str, default=None, help="comma-separated index ratios to tabulate")
    a.add_argument("--points", type=int, default=10_000, help="grid size for the argmin cross-check")
    a.add_argument("--out", type=str, default=None, help="optional JSON report path")

    return parser, registry


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = build_parser()
    try:
        config_path = _config_path_from_argv(argv)
        if config_path is not None:
            verb = argv[0] if argv and not argv[0].startswith("-") else None
            if verb in registry:
                _apply_config_defaults(registry[verb], _load_config_file(config_path))
        args = parser.parse_args(argv)
        return args.func(args)
    except (ValueError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
