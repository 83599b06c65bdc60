"""Skewed query workloads and the hot-tier sizing model.

Queries are drawn from a Zipf law over a shuffled query pool: rank r is hit
with probability proportional to r^(-beta). Sampling inverts the exact
normalized CDF rather than relying on a library approximation, so the finite
universe is respected and the draw is reproducible from the seed alone.

The sizing model treats graph search cost as logarithmic in graph size:
searching a hot tier of ratio IR costs ln(IR*n), and a miss (true neighbor
outside the hot set) adds a full-graph search at ln(n). Minimizing the
expected cost in IR gives a closed-form optimal ratio.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import VectorDataset, brute_force_knn, dataset_digest

__all__ = [
    "ZipfParams",
    "zipf_weights",
    "zipf_sample",
    "WorkloadSpec",
    "Workload",
    "build_workload",
    "derive_stream_seeds",
    "miss_probability",
    "exact_miss_probability",
    "expected_search_cost",
    "optimal_index_ratio",
    "cost_curve",
    "grid_optimal_index_ratio",
    "workload_manifest",
    "save_manifest",
    "load_manifest",
]

_MANIFEST_FORMAT = "hotgraph-workload"
_MANIFEST_VERSION = 1


@dataclass(frozen=True)
class ZipfParams:
    """A finite Zipf law: rank r in 1..universe drawn with P(r) proportional to r^(-beta)."""

    universe: int
    beta: float = 1.2
    seed: int = 0

    def __post_init__(self):
        if self.universe < 1:
            raise ValueError(f"universe must be >= 1, got {self.universe}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")


def zipf_weights(universe: int, beta: float) -> np.ndarray:
    """Normalized Zipf probabilities for ranks 1..universe (index 0 = rank 1)."""
    if universe < 1:
        raise ValueError(f"universe must be >= 1, got {universe}")
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    ranks = np.arange(1, universe + 1, dtype=np.float64)
    w = ranks ** (-beta)
    return w / w.sum()


def zipf_sample(params: ZipfParams, count: int) -> np.ndarray:
    """Draw ``count`` i.i.d. ranks in 1..universe by inverting the exact Zipf CDF.

    Deterministic given ``params.seed``; rank 1 is the most popular item.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    cdf = np.cumsum(zipf_weights(params.universe, params.beta))
    cdf[-1] = 1.0  # close the last bin against rounding
    u = np.random.default_rng(params.seed).random(count)
    ranks = np.searchsorted(cdf, u, side="right") + 1
    return np.minimum(ranks, params.universe).astype(np.int64)


@dataclass(frozen=True)
class WorkloadSpec:
    """Recipe for a history/eval query stream over a 90:10 corpus split."""

    beta: float = 1.2
    n_history: int = 20_000
    n_eval: int = 1_000
    truth_k: int = 100
    uniform_eval: bool = False
    seed: int = 0
    base_fraction: float = 0.9

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.n_history < 1:
            raise ValueError(f"n_history must be >= 1, got {self.n_history}")
        if self.n_eval < 1:
            raise ValueError(f"n_eval must be >= 1, got {self.n_eval}")
        if self.truth_k < 1:
            raise ValueError(f"truth_k must be >= 1, got {self.truth_k}")
        if not (0.0 < self.base_fraction < 1.0):
            raise ValueError(f"base_fraction must lie in (0, 1), got {self.base_fraction}")


@dataclass
class Workload:
    """A realized workload: split corpus, query streams, and exact ground truth.

    ``history`` and ``eval_stream`` hold indexes into ``pool``; ``truth_ids``
    row i lists the true nearest base ids of pool vector i.
    """

    base: VectorDataset
    pool: VectorDataset
    history: np.ndarray
    eval_stream: np.ndarray
    truth_ids: np.ndarray
    truth_dists: np.ndarray
    rank_to_pool: np.ndarray
    spec: WorkloadSpec


def derive_stream_seeds(seed: int):
    """The three independent stream seeds (permutation, history, eval) for a spec seed."""
    return tuple(
        int(s) for s in np.random.SeedSequence(seed).generate_state(3, dtype=np.uint64)
    )


def build_workload(dataset: VectorDataset, spec: WorkloadSpec) -> Workload:
    """Split ``dataset`` and realize the query streams described by ``spec``.

    The first floor(base_fraction * n) rows become the searchable base; the
    rest form the query pool. Popularity rank is decoupled from storage order
    by a seeded permutation, then history and eval streams are drawn by Zipf
    rank (eval uniformly instead when ``uniform_eval`` is set). Three
    independent generator streams are derived from the single spec seed, so
    any one stream can be reproduced without redrawing the others.
    """
    n = dataset.count
    n_base = int(spec.base_fraction * n)
    n_pool = n - n_base
    if n_base < 1 or n_pool < 1:
        raise ValueError(f"cannot split {n} vectors at fraction {spec.base_fraction}")
    if spec.truth_k > n_base:
        raise ValueError(f"truth_k={spec.truth_k} exceeds base size {n_base}")

    base = dataset.subset(np.arange(n_base, dtype=np.int64))
    pool = dataset.subset(np.arange(n_base, n, dtype=np.int64))

    perm_seed, hist_seed, eval_seed = derive_stream_seeds(spec.seed)
    rank_to_pool = np.random.default_rng(perm_seed).permutation(n_pool).astype(np.int64)

    hist_ranks = zipf_sample(ZipfParams(n_pool, spec.beta, hist_seed), spec.n_history)
    history = rank_to_pool[hist_ranks - 1]

    if spec.uniform_eval:
        rng_eval = np.random.default_rng(eval_seed)
        eval_stream = rng_eval.integers(0, n_pool, size=spec.n_eval).astype(np.int64)
    else:
        eval_ranks = zipf_sample(ZipfParams(n_pool, spec.beta, eval_seed), spec.n_eval)
        eval_stream = rank_to_pool[eval_ranks - 1]

    truth_ids = np.empty((n_pool, spec.truth_k), dtype=np.int64)
    truth_dists = np.empty((n_pool, spec.truth_k), dtype=np.float32)
    for i in range(n_pool):
        res = brute_force_knn(base, pool.data[i], spec.truth_k)
        truth_ids[i] = res.ids
        truth_dists[i] = res.distances

    return Workload(
        base=base,
        pool=pool,
        history=history,
        eval_stream=eval_stream,
        truth_ids=truth_ids,
        truth_dists=truth_dists,
        rank_to_pool=rank_to_pool,
        spec=spec,
    )


def _check_model_args(index_ratio, universe: int, beta: float) -> np.ndarray:
    if universe < 2:
        raise ValueError(f"universe must be >= 2, got {universe}")
    if beta <= 0 or beta == 1.0:
        raise ValueError(f"beta must be positive and != 1, got {beta}")
    r = np.asarray(index_ratio, dtype=np.float64)
    if np.any(r <= 0) or np.any(r > 1):
        raise ValueError("index_ratio must lie in (0, 1]")
    if np.any(r * universe < 1):
        raise ValueError("index_ratio * universe must be >= 1 (hot set of at least one node)")
    return r


def miss_probability(index_ratio, universe: int, beta: float):
    """Continuous-tail estimate of P(queried item outside the hot set).

    Approximates the discrete Zipf tail mass beyond rank index_ratio*universe
    by the ratio of power-law integrals. Scalar in, scalar out; arrays pass
    through elementwise.
    """
    r = _check_model_args(index_ratio, universe, beta)
    a = 1.0 - beta
    m = r * universe
    p = 1.0 - (1.0 - m**a) / (1.0 - float(universe) ** a)
    return float(p) if np.isscalar(index_ratio) else p


def exact_miss_probability(index_ratio: float, universe: int, beta: float) -> float:
    """Exact discrete tail mass: 1 minus the summed weight of the hot ranks."""
    _check_model_args(index_ratio, universe, beta)
    m = min(universe, math.ceil(index_ratio * universe))
    if m == universe:
        return 0.0  # every rank is hot; no rounding residue
    w = zipf_weights(universe, beta)
    return float(max(0.0, 1.0 - w[:m].sum()))


def expected_search_cost(index_ratio, universe: int, beta: float):
    """Expected per-query cost in hop units: ln(hot size) + p_miss * ln(full size)."""
    r = _check_model_args(index_ratio, universe, beta)
    cost = np.log(r * universe) + miss_probability(r, universe, beta) * math.log(universe)
    return float(cost) if np.isscalar(index_ratio) else cost


def optimal_index_ratio(universe: int, beta: float) -> float:
    """Closed-form stationary point of expected_search_cost in the index ratio.

    Setting the derivative to zero gives
        IR* = ((n^(1-b) - 1) / ((1-b) * ln(n) * n^(1-b)))^(1/(1-b)).
    Requires beta > 1 (the skewed regime where a small hot set pays off);
    values above 1 mean the model prefers indexing the whole corpus. When the
    result lies inside the model's domain, a bracket check confirms no point
    one percent to either side is cheaper.
    """
    if universe < 2:
        raise ValueError(f"universe must be >= 2, got {universe}")
    if beta <= 1.0:
        raise ValueError(f"beta must be > 1, got {beta}")
    n = float(universe)
    a = 1.0 - beta
    ratio = float(((n**a - 1.0) / (a * math.log(n) * n**a)) ** (1.0 / a))

    if ratio / 1.01 > 1.0 / universe and ratio * 1.01 <= 1.0:
        c0 = expected_search_cost(ratio, universe, beta)
        tol = 1e-9 * abs(c0)
        lower = min(
            expected_search_cost(ratio * 1.01, universe, beta),
            expected_search_cost(ratio / 1.01, universe, beta),
        )
        if lower < c0 - tol:
            raise ArithmeticError(
                f"closed-form ratio {ratio:.6g} is not a local cost minimum "
                f"(a neighbor costs {lower:.9g} vs {c0:.9g})"
            )
    return ratio


def cost_curve(universe: int, beta: float, points: int = 256, lo: float | None = None, hi: float = 1.0):
    """(ratios, costs) on a log-spaced grid from one-node hot sets up to ``hi``."""
    if points < 2:
        raise ValueError(f"points must be >= 2, got {points}")
    if lo is None:
        lo = 1.0 / universe
        while lo * universe < 1.0:  # float division can land a hair under one node
            lo = math.nextafter(lo, 1.0)
    if not (0.0 < lo < hi <= 1.0):
        raise ValueError(f"need 0 < lo < hi <= 1, got lo={lo}, hi={hi}")
    ratios = np.exp(np.linspace(math.log(lo), math.log(hi), points))
    # exp(log x) does not round-trip exactly; pin both endpoints
    ratios[0] = lo
    ratios[-1] = hi
    return ratios, expected_search_cost(ratios, universe, beta)


def grid_optimal_index_ratio(universe: int, beta: float, points: int = 10_000) -> float:
    """Brute-force argmin of the cost curve; cross-check for the closed form."""
    ratios, costs = cost_curve(universe, beta, points)
    return float(ratios[int(np.argmin(costs))])


def workload_manifest(workload: Workload) -> dict:
    """Path-free description of a workload: spec echo, derived stream seeds,
    sizes, and content digests, enough to replay the run exactly."""
    spec = workload.spec
    perm_seed, hist_seed, eval_seed = derive_stream_seeds(spec.seed)
    return {
        "format": _MANIFEST_FORMAT,
        "version": _MANIFEST_VERSION,
        "beta": spec.beta,
        "n_history": spec.n_history,
        "n_eval": spec.n_eval,
        "truth_k": spec.truth_k,
        "uniform_eval": spec.uniform_eval,
        "seed": spec.seed,
        "rank_permutation_seed": perm_seed,
        "history_seed": hist_seed,
        "eval_seed": eval_seed,
        "base_fraction": spec.base_fraction,
        "dim": workload.base.dim,
        "base_count": workload.base.count,
        "pool_count": workload.pool.count,
        "base_digest": dataset_digest(workload.base).hex(),
        "pool_digest": dataset_digest(workload.pool).hex(),
    }


def save_manifest(manifest: dict, path) -> None:
    text = json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def load_manifest(path) -> dict:
    try:
        manifest = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid manifest JSON: {exc}") from exc
    if not isinstance(manifest, dict) or manifest.get("format") != _MANIFEST_FORMAT:
        raise ValueError(f"{path}: not a workload manifest")
    if manifest.get("version") != _MANIFEST_VERSION:
        raise ValueError(f"{path}: unsupported manifest version {manifest.get('version')!r}")
    return manifest
