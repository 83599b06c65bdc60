import numpy as np
import pytest

from hotgraph import (
    ResultList,
    VectorDataset,
    batch_distances,
    brute_force_knn,
    dataset_digest,
    distance,
    k_smallest,
    load_fvecs,
    load_ivecs,
    recall_at_k,
    synthetic_dataset,
    write_fvecs,
    write_ivecs,
)


def test_dataset_validation():
    ds = VectorDataset(np.zeros((4, 3), dtype=np.float32))
    assert ds.count == 4 and ds.dim == 3
    with pytest.raises(ValueError):
        VectorDataset(np.zeros((4,), dtype=np.float32))
    with pytest.raises(ValueError):
        VectorDataset(np.zeros((0, 3), dtype=np.float32))
    with pytest.raises(ValueError):
        VectorDataset(np.zeros((4, 0), dtype=np.float32))


def test_dataset_accepts_castable_input():
    ds = VectorDataset(np.arange(6, dtype=np.float64).reshape(2, 3))
    assert ds.data.dtype == np.float32
    assert ds.data.flags["C_CONTIGUOUS"]


def test_dataset_subset():
    ds = VectorDataset(np.arange(12, dtype=np.float32).reshape(4, 3))
    sub = ds.subset(np.array([2, 0]))
    assert sub.count == 2
    assert np.array_equal(sub.data[0], ds.data[2])


def test_distance_is_euclidean():
    a = np.array([1.0, 2.0], dtype=np.float32)
    b = np.array([4.0, 6.0], dtype=np.float32)
    assert distance(a, b) == pytest.approx(5.0)
    assert distance(a, a) == 0.0
    assert distance(a, b) == distance(b, a)


def test_batch_distances_matches_loop():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(50, 7)).astype(np.float32)
    q = rng.normal(size=7).astype(np.float32)
    d = batch_distances(pts, q)
    expect = np.array([distance(p, q) for p in pts])
    np.testing.assert_allclose(d, expect, rtol=1e-5)


def test_k_smallest_exact_and_ties():
    ids = np.array([5, 3, 9, 1], dtype=np.int64)
    d = np.array([2.0, 1.0, 2.0, 3.0], dtype=np.float32)
    out_ids, out_d = k_smallest(ids, d, 3)
    # tie at distance 2.0 resolves to the lower id
    assert out_ids.tolist() == [3, 5, 9]
    assert out_d.tolist() == [1.0, 2.0, 2.0]


def test_k_smallest_k_larger_than_input():
    ids = np.array([2, 1], dtype=np.int64)
    d = np.array([1.0, 0.5], dtype=np.float32)
    out_ids, _ = k_smallest(ids, d, 10)
    assert out_ids.tolist() == [1, 2]


def test_brute_force_matches_argsort():
    ds = synthetic_dataset(300, 5, seed=2)
    q = synthetic_dataset(1, 5, seed=9, center_seed=2).data[0]
    res = brute_force_knn(ds, q, 12)
    d = batch_distances(ds.data, q)
    expect = np.lexsort((np.arange(ds.count), d))[:12]
    assert res.ids.tolist() == expect.tolist()
    assert np.all(np.diff(res.distances) >= 0)


def test_brute_force_chunked_scan(monkeypatch):
    import hotgraph.core as core

    monkeypatch.setattr(core, "_SCAN_CHUNK", 64)
    ds = synthetic_dataset(300, 5, seed=2)
    q = synthetic_dataset(1, 5, seed=9, center_seed=2).data[0]
    res = core.brute_force_knn(ds, q, 12)
    d = batch_distances(ds.data, q)
    expect = np.lexsort((np.arange(ds.count), d))[:12]
    assert res.ids.tolist() == expect.tolist()


def test_result_list_validation():
    with pytest.raises(ValueError):
        ResultList(np.array([1, 2], dtype=np.int64), np.array([2.0, 1.0], dtype=np.float32))
    with pytest.raises(ValueError):
        ResultList(np.array([1], dtype=np.int64), np.array([1.0, 2.0], dtype=np.float32))


def test_recall_at_k_values_and_inputs():
    truth = np.array([1, 2, 3, 4], dtype=np.int64)
    approx = np.array([1, 2, 9, 8], dtype=np.int64)
    assert recall_at_k(approx, truth, 4) == pytest.approx(0.5)
    rl = ResultList(np.array([1, 2], dtype=np.int64), np.array([0.0, 1.0], dtype=np.float32))
    assert recall_at_k(rl, truth, 2) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        recall_at_k(approx, truth, 0)
    with pytest.raises(ValueError):
        recall_at_k(approx[:2], truth, 3)


def test_fvecs_ivecs_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    f = rng.normal(size=(17, 6)).astype(np.float32)
    i = rng.integers(0, 100, size=(4, 9)).astype(np.int32)
    write_fvecs(tmp_path / "a.fvecs", f)
    write_ivecs(tmp_path / "a.ivecs", i)
    assert np.array_equal(load_fvecs(tmp_path / "a.fvecs").data, f)
    assert np.array_equal(load_ivecs(tmp_path / "a.ivecs"), i)


def test_vecs_reject_corrupt_files(tmp_path):
    f = np.ones((3, 4), dtype=np.float32)
    path = tmp_path / "b.fvecs"
    write_fvecs(path, f)
    raw = path.read_bytes()
    path.write_bytes(raw[:-2])  # truncated final record
    with pytest.raises(ValueError):
        load_fvecs(path)
    path.write_bytes(raw + b"\x01\x02")  # trailing garbage
    with pytest.raises(ValueError):
        load_fvecs(path)
    bad = bytearray(raw)
    bad[20] = 250  # second record header no longer matches the first
    path.write_bytes(bytes(bad))
    with pytest.raises(ValueError):
        load_fvecs(path)


def test_synthetic_dataset_seeding():
    a = synthetic_dataset(100, 4, seed=0)
    b = synthetic_dataset(100, 4, seed=0)
    c = synthetic_dataset(100, 4, seed=1)
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)
    with pytest.raises(ValueError):
        synthetic_dataset(0, 4)
    with pytest.raises(ValueError):
        synthetic_dataset(4, 4, clusters=0)


def test_synthetic_center_seed_shares_mixture():
    corpus = synthetic_dataset(400, 6, clusters=4, seed=0)
    queries = synthetic_dataset(50, 6, clusters=4, seed=1, center_seed=0)
    # queries drawn near corpus mass: nearest corpus point is much closer
    # than the scale of the cluster centers
    d = np.array([batch_distances(corpus.data, q).min() for q in queries.data])
    assert np.sqrt(d.max()) < 10.0


def test_dataset_digest_stability():
    a = synthetic_dataset(50, 3, seed=0)
    b = synthetic_dataset(50, 3, seed=0)
    assert dataset_digest(a) == dataset_digest(b)
    mutated = a.data.copy()
    mutated[0, 0] += 1.0
    assert dataset_digest(VectorDataset(mutated)) != dataset_digest(a)
