import threading

import numpy as np
import pytest

from hotgraph import (
    AccessCounter,
    BuildParams,
    HotIndexConfig,
    SearchParams,
    beam_search,
    brute_force_knn,
    build_dual_index,
    build_full_index,
    build_hot_index,
    effective_hot_knng_k,
    publish_hot,
    recall_at_k,
    record_access,
    refresh_hot_if_due,
    select_hot_nodes,
    serve_search,
    should_rebuild,
    synthetic_dataset,
)
from tests.conftest import SMALL_BUILD


def test_counter_record_and_total():
    c = AccessCounter(10)
    record_access(c, 7)
    c.record_many([7, 3, 3])
    counts = c.snapshot()
    assert counts[7] == 2 and counts[3] == 2
    assert c.total_since_rebuild == 3 + 1
    with pytest.raises(ValueError):
        c.record(10)
    with pytest.raises(ValueError):
        c.record(-1)


def test_counter_snapshot_is_isolated():
    c = AccessCounter(4)
    c.record(1)
    snap = c.snapshot()
    snap[1] = 99
    assert c.snapshot()[1] == 1


def test_counter_concurrent_recording_loses_nothing():
    c = AccessCounter(50)
    per_thread = 1250
    threads = [
        threading.Thread(target=lambda s=s: [c.record((s * 7 + i) % 50) for i in range(per_thread)])
        for s in range(8)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert c.total_since_rebuild == 8 * per_thread
    assert int(c.snapshot().sum()) == 8 * per_thread


def test_counter_publish_halves_and_resets():
    c = AccessCounter(4)
    c.record_many([0, 0, 0, 1, 1, 2])
    c.on_publish()
    assert c.snapshot().tolist() == [1, 1, 0, 0]  # floor halving
    assert c.total_since_rebuild == 0


def test_counter_restore_validation():
    c = AccessCounter(3)
    c.restore(np.array([1, 2, 3]), 6)
    assert c.snapshot().tolist() == [1, 2, 3]
    with pytest.raises(ValueError):
        c.restore(np.array([1, 2]), 3)


def test_config_validation():
    with pytest.raises(ValueError):
        HotIndexConfig(n_query=0)
    with pytest.raises(ValueError):
        HotIndexConfig(index_ratio=0.0)
    with pytest.raises(ValueError):
        HotIndexConfig(index_ratio=1.1)
    cfg = HotIndexConfig(n_query=10, index_ratio=1.0)
    assert cfg.hot_size(123) == 123
    assert HotIndexConfig(index_ratio=0.01).hot_size(250) == 3  # ceil
    # a 1-node hot set cannot host a graph
    with pytest.raises(ValueError):
        HotIndexConfig(index_ratio=0.001).validate_for(100)


def test_effective_knng_scaling():
    assert effective_hot_knng_k(100, 1000) == 100
    assert effective_hot_knng_k(100, 100) == 20
    assert effective_hot_knng_k(100, 9) == 1
    assert effective_hot_knng_k(3, 1000) == 3


def test_should_rebuild_strict_boundary():
    cfg = HotIndexConfig(n_query=5, index_ratio=0.5)
    c = AccessCounter(10)
    c.record_many([0] * 5)
    assert not should_rebuild(c, cfg)  # total == n_query stays quiet
    c.record(0)
    assert should_rebuild(c, cfg)


def test_select_hot_nodes_ordering_and_ties():
    c = AccessCounter(6)
    c.record_many([4, 4, 4, 2, 2, 5, 5, 1])
    picked = select_hot_nodes(c, 4)
    # counts: 4->3, 2->2, 5->2, 1->1; tie between 2 and 5 goes to the lower id
    assert picked.tolist() == [4, 2, 5, 1]
    with pytest.raises(ValueError):
        select_hot_nodes(c, 0)
    with pytest.raises(ValueError):
        select_hot_nodes(c, 7)


def test_select_hot_nodes_all_zero_counts():
    c = AccessCounter(5)
    assert select_hot_nodes(c, 3).tolist() == [0, 1, 2]


def test_build_hot_index_validation(small_corpus):
    with pytest.raises(ValueError):
        build_hot_index(small_corpus, [1, 1, 2, 3], SMALL_BUILD)
    with pytest.raises(ValueError):
        build_hot_index(small_corpus, [1, small_corpus.count], SMALL_BUILD)
    with pytest.raises(ValueError):
        build_hot_index(small_corpus, [1], SMALL_BUILD)  # too small for any graph


def test_build_hot_index_members_and_entries(small_corpus):
    ids = np.arange(100, 160, dtype=np.int64)[::-1]  # unsorted input is fine
    hot = build_hot_index(small_corpus, ids, SMALL_BUILD)
    assert np.array_equal(hot.members, np.arange(100, 160))
    assert hot.graph.node_count == 60
    assert all(100 <= e < 160 for e in hot.entry_points)
    local = hot.local_entry_points
    assert [int(hot.members[e]) for e in local] == hot.entry_points
    hot.graph.validate(hot.subset)


def test_hot_subset_search_quality(small_corpus):
    ids = np.arange(0, 200, dtype=np.int64)
    hot = build_hot_index(small_corpus, ids, SMALL_BUILD)
    sub = hot.subset
    hits = 0.0
    for i in range(0, 200, 10):
        res, _ = beam_search(hot.graph, hot.local_entry_points, sub, sub.data[i], 5, 30)
        hits += recall_at_k(res, brute_force_knn(sub, sub.data[i], 5), 5)
    assert hits / 20 >= 0.95


def test_whole_dataset_hot_equals_full_graph(small_corpus, small_graph):
    """With every node hot and n >= 5*knng_k the subset build is the full build."""
    graph, entries = small_graph
    hot = build_hot_index(small_corpus, np.arange(small_corpus.count), SMALL_BUILD)
    assert hot.entry_points == entries
    assert all(
        np.array_equal(a, b) for a, b in zip(hot.graph.adjacency, graph.adjacency)
    )


def test_publish_hot_swaps_and_ages(small_corpus):
    cfg = HotIndexConfig(n_query=50, index_ratio=0.1, build=SMALL_BUILD)
    index = build_dual_index(small_corpus, cfg)
    index.counter.record_many(list(range(60)))
    hot = build_hot_index(small_corpus, select_hot_nodes(index.counter, 80), SMALL_BUILD)
    publish_hot(index, hot)
    assert index.hot is hot
    assert index.counter.total_since_rebuild == 0
    assert int(index.counter.snapshot().sum()) == 0  # 1 // 2 per touched node


def test_publish_hot_rejects_foreign_graph(small_corpus):
    cfg = HotIndexConfig(n_query=50, index_ratio=0.1, build=SMALL_BUILD)
    index = build_dual_index(small_corpus, cfg)
    other = synthetic_dataset(300, 8, seed=9)
    hot = build_hot_index(other, np.arange(100), SMALL_BUILD)
    with pytest.raises(ValueError):
        publish_hot(index, hot)


def test_refresh_hot_if_due_lifecycle(small_corpus):
    cfg = HotIndexConfig(n_query=40, index_ratio=0.1, build=SMALL_BUILD)
    index = build_dual_index(small_corpus, cfg)
    params = SearchParams(k=5, l=30)
    assert not refresh_hot_if_due(index, small_corpus)
    assert index.hot is None
    served = 0
    while index.counter.total_since_rebuild <= cfg.n_query:
        serve_search(index, small_corpus, small_corpus.data[served % 20], params)
        served += 1
    assert refresh_hot_if_due(index, small_corpus)
    assert index.hot is not None
    assert index.hot.members.size == cfg.hot_size(small_corpus.count)
    assert index.counter.total_since_rebuild == 0
    assert not refresh_hot_if_due(index, small_corpus)  # trigger reset


@pytest.fixture(scope="module")
def served_dual(small_corpus):
    """Dual index heated by serving, plus the counter snapshot at publish time."""
    cfg = HotIndexConfig(n_query=500, index_ratio=0.05, build=SMALL_BUILD)
    index = build_dual_index(small_corpus, cfg)
    params = SearchParams(k=5, l=30)
    for rep in range(3):
        for i in range(120):
            serve_search(index, small_corpus, small_corpus.data[i], params)
    pre_counts = index.counter.snapshot()
    hot_ids = select_hot_nodes(index.counter, cfg.hot_size(small_corpus.count))
    publish_hot(index, build_hot_index(small_corpus, hot_ids, SMALL_BUILD))
    return index, pre_counts


def test_hot_members_cover_served_results(served_dual):
    """The published hot set contains the most frequently returned nodes."""
    index, pre_counts = served_dual
    order = np.lexsort((np.arange(pre_counts.size), -pre_counts))
    member_set = set(index.hot.members.tolist())
    assert all(int(node) in member_set for node in order[:10])
    # and the published counter is the halved snapshot
    assert np.array_equal(index.counter.snapshot(), pre_counts // 2)


def test_build_dual_index_validates_ratio(small_corpus):
    bad = HotIndexConfig(n_query=10, index_ratio=0.001, build=SMALL_BUILD)
    with pytest.raises(ValueError):
        build_dual_index(small_corpus, bad)
