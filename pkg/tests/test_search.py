import numpy as np
import pytest

from hotgraph import (
    FEATURE_NAMES,
    VERDICT_CONTINUE,
    VERDICT_TERMINATE,
    HotIndexConfig,
    NeighborGraph,
    SearchParams,
    SearchTrace,
    VectorDataset,
    beam_search,
    brute_force_knn,
    build_dual_index,
    collect_checkpoint_trace,
    constant_tree,
    dual_beam_search,
    dynamic_search,
    extract_features,
    recall_at_k,
    serve_search,
    synthetic_dataset,
)
from tests.conftest import SMALL_BUILD


def _chain_graph():
    data = np.array([[0.0], [1.0], [2.0], [3.0], [4.0]], dtype=np.float32)
    ds = VectorDataset(data)
    rows = ([1], [0, 2], [1, 3], [2, 4], [3])
    graph = NeighborGraph(
        node_count=5,
        adjacency=[np.array(r, dtype=np.int32) for r in rows],
        max_degree=2,
    )
    return graph, ds


def test_beam_hand_traced_chain():
    graph, ds = _chain_graph()
    res, trace = beam_search(graph, [0], ds, np.array([3.2], dtype=np.float32), 1, 2)
    assert res.ids.tolist() == [3]
    assert res.distances[0] == pytest.approx(0.2, rel=1e-5)
    assert trace.expansions == [0, 1, 2, 3, 4]
    assert trace.dist_count == 5  # entry + one fresh neighbor per expansion
    assert trace.update_count == 4
    assert trace.final_topk == (3,)


def test_beam_hand_traced_chain_k2():
    graph, ds = _chain_graph()
    res, trace = beam_search(graph, [0], ds, np.array([3.2], dtype=np.float32), 2, 3)
    assert res.ids.tolist() == [3, 4]
    assert trace.dist_count == 5
    assert trace.update_count == 4


def test_beam_dist_count_replays_from_expansions(small_graph, small_corpus):
    graph, entries = small_graph
    qs = synthetic_dataset(5, 8, seed=21, center_seed=3)
    for q in qs.data:
        _, trace = beam_search(graph, entries, small_corpus, q, 5, 30)
        evaluated = set(trace.entry_ids)
        replay = len(trace.entry_ids)
        for p in trace.expansions:
            fresh = [int(v) for v in graph.adjacency[p] if int(v) not in evaluated]
            evaluated.update(fresh)
            replay += len(fresh)
        assert replay == trace.dist_count
        assert trace.dist_count <= small_corpus.count


def test_beam_exhaustive_pool_equals_brute_force(small_graph, small_corpus):
    graph, entries = small_graph
    q = synthetic_dataset(1, 8, seed=33, center_seed=3).data[0]
    res, _ = beam_search(graph, entries, small_corpus, q, 10, small_corpus.count)
    truth = brute_force_knn(small_corpus, q, 10)
    assert res.ids.tolist() == truth.ids.tolist()


def test_beam_validation_errors(small_graph, small_corpus):
    graph, entries = small_graph
    q = small_corpus.data[0]
    with pytest.raises(ValueError):
        beam_search(graph, entries, small_corpus, q, 5, 4)  # l < k
    with pytest.raises(ValueError):
        beam_search(graph, [], small_corpus, q, 5, 30)
    with pytest.raises(ValueError):
        beam_search(graph, [small_corpus.count], small_corpus, q, 5, 30)
    other = synthetic_dataset(10, 8, seed=0)
    with pytest.raises(ValueError):
        beam_search(graph, entries, other, q, 5, 30)


def test_search_params_validation():
    p = SearchParams(k=5, l=40)
    assert p.s_l == 40  # defaults to l
    assert SearchParams(k=5, l=40, s_l=10).s_l == 10
    with pytest.raises(ValueError):
        SearchParams(k=0, l=10)
    with pytest.raises(ValueError):
        SearchParams(k=5, l=4)
    with pytest.raises(ValueError):
        SearchParams(k=5, l=40, s_l=4)
    with pytest.raises(ValueError):
        SearchParams(eval_gap=0)
    with pytest.raises(ValueError):
        SearchParams(add_step=-1)


def test_feature_names_schema_frozen():
    assert FEATURE_NAMES == (
        "hotIdx_1st",
        "hotIdx_1st_div_kth",
        "fullIdx_1st",
        "fullIdx_1st_div_kth",
        "dist_count",
        "update_count",
    )


def test_extract_features_oracle():
    trace = SearchTrace(
        dist_count=7,
        update_count=3,
        hot_first=2.0,
        hot_kth=4.0,
        full_first=1.0,
        full_kth=5.0,
    )
    fv = extract_features(trace, 3)
    assert fv.to_array().tolist() == [2.0, 0.5, 1.0, 0.2, 7.0, 3.0]


def test_extract_features_zero_kth_ratio_is_one():
    trace = SearchTrace(hot_first=0.0, hot_kth=0.0, full_first=0.0, full_kth=0.0)
    fv = extract_features(trace, 1)
    assert fv.hot_first_div_kth == 1.0
    assert fv.full_first_div_kth == 1.0


def test_dual_beam_requires_hot(small_corpus):
    cold = build_dual_index(
        small_corpus, HotIndexConfig(n_query=100, index_ratio=0.05, build=SMALL_BUILD)
    )
    with pytest.raises(ValueError):
        dual_beam_search(cold, small_corpus, small_corpus.data[0], SearchParams(k=5, l=30))


def test_serve_search_cold_equals_plain_beam(small_corpus):
    cold = build_dual_index(
        small_corpus, HotIndexConfig(n_query=100, index_ratio=0.05, build=SMALL_BUILD)
    )
    params = SearchParams(k=5, l=30)
    q = small_corpus.data[7]
    before = cold.counter.total_since_rebuild
    res, _ = serve_search(cold, small_corpus, q, params)
    assert cold.counter.total_since_rebuild == before + 5
    ref, _ = beam_search(cold.full_graph, cold.entry_points, small_corpus, q, 5, 30)
    assert res.ids.tolist() == ref.ids.tolist()
    counts = cold.counter.snapshot()
    assert all(counts[i] >= 1 for i in res.ids)


def test_dynamic_constant_continue_matches_dual_beam(small_dual, small_corpus, small_params):
    tree = constant_tree(VERDICT_CONTINUE)
    qs = synthetic_dataset(40, 8, seed=17, center_seed=3)
    for q in qs.data:
        a, ta = dual_beam_search(small_dual, small_corpus, q, small_params)
        b, tb = dynamic_search(small_dual, small_corpus, q, small_params, tree)
        assert a.ids.tobytes() == b.ids.tobytes()
        assert a.distances.tobytes() == b.distances.tobytes()
        assert ta.dist_count == tb.dist_count
        assert ta.update_count == tb.update_count
        assert not tb.terminated_early


def test_dynamic_constant_terminate_cost_bound(small_dual, small_corpus, small_params):
    tree = constant_tree(VERDICT_TERMINATE)
    bound = small_params.eval_gap + small_dual.full_graph.max_degree
    qs = synthetic_dataset(30, 8, seed=18, center_seed=3)
    stopped = 0
    for q in qs.data:
        _, trace = dynamic_search(small_dual, small_corpus, q, small_params, tree)
        assert trace.dist_count <= bound
        stopped += trace.terminated_early
    assert stopped > 0


def test_add_step_grants_extra_expansions(small_dual, small_corpus, small_params):
    from dataclasses import replace

    tree = constant_tree(VERDICT_TERMINATE)
    q = synthetic_dataset(1, 8, seed=19, center_seed=3).data[0]
    _, t0 = dynamic_search(small_dual, small_corpus, q, small_params, tree)
    more = replace(small_params, add_step=3)
    _, t3 = dynamic_search(small_dual, small_corpus, q, more, tree)
    assert t3.dist_count >= t0.dist_count
    assert len(t3.expansions) <= len(t0.expansions) + 3
    bound = small_params.eval_gap + 4 * small_dual.full_graph.max_degree
    assert t3.dist_count <= bound


def test_dynamic_rejects_missing_tree(small_dual, small_corpus, small_params):
    with pytest.raises(ValueError):
        dynamic_search(small_dual, small_corpus, small_corpus.data[0], small_params, None)


def test_trace_collection_checkpoints(small_dual, small_corpus, small_params):
    q = synthetic_dataset(1, 8, seed=23, center_seed=3).data[0]
    res, trace = collect_checkpoint_trace(small_dual, small_corpus, q, small_params)
    assert len(trace.checkpoint_features) == len(trace.checkpoint_topk) >= 1
    assert trace.checkpoint_topk[-1] == trace.final_topk
    assert trace.final_topk == tuple(sorted(int(i) for i in res.ids))
    counts = [fv.dist_count for fv in trace.checkpoint_features]
    assert all(b > a for a, b in zip(counts, counts[1:]))
    # every checkpoint except the terminal one fires at or past the gap
    assert all(c >= small_params.eval_gap for c in counts[:-1])


def test_two_phase_charges_counter(small_dual, small_corpus, small_params):
    before = small_dual.counter.total_since_rebuild
    res, _ = dual_beam_search(
        small_dual, small_corpus, small_corpus.data[3], small_params
    )
    assert small_dual.counter.total_since_rebuild == before + small_params.k


def test_early_termination_safety(small_dual, small_corpus, small_params, small_tree):
    """A trained gate must not do worse than stopping at the first checkpoint."""
    qs = synthetic_dataset(60, 8, seed=29, center_seed=3)
    floor_tree = constant_tree(VERDICT_TERMINATE)
    r_tree = r_floor = 0.0
    for q in qs.data:
        truth = brute_force_knn(small_corpus, q, small_params.k)
        a, _ = dynamic_search(small_dual, small_corpus, q, small_params, small_tree)
        b, _ = dynamic_search(small_dual, small_corpus, q, small_params, floor_tree)
        r_tree += recall_at_k(a, truth, small_params.k)
        r_floor += recall_at_k(b, truth, small_params.k)
    assert r_tree >= r_floor
