"""hotgraph: a dual-layer graph index for skewed nearest-neighbor workloads.

A full navigable graph over the corpus answers every query; a small graph
over the most frequently returned points answers the popular ones fast. A
decision tree watches search-progress features and stops the full-graph
phase once further work is unlikely to improve the top-k.
"""

from .core import (
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

from .graph_build import (
    BuildParams,
    NeighborGraph,
    build_full_index,
    build_knng,
    select_entry_points,
    ssg_prune,
)

from .hot_index import (
    AccessCounter,
    DualIndex,
    HotGraph,
    HotIndexConfig,
    build_dual_index,
    build_hot_index,
    effective_hot_knng_k,
    publish_hot,
    record_access,
    refresh_hot_if_due,
    select_hot_nodes,
    should_rebuild,
)

from .search import (
    FEATURE_NAMES,
    FeatureVector,
    SearchParams,
    SearchTrace,
    VERDICT_CONTINUE,
    VERDICT_TERMINATE,
    beam_search,
    collect_checkpoint_trace,
    dual_beam_search,
    dynamic_search,
    extract_features,
    serve_search,
)

from .decision_tree import (
    DecisionTree,
    LABEL_CONTINUE,
    LABEL_TERMINATE,
    TrainingTrace,
    TreeNode,
    collect_training_traces,
    constant_tree,
    feature_importance,
    generate_training_data,
    load_tree,
    predict,
    samples_from_traces,
    save_training_csv,
    save_tree,
    train_tree,
    tree_from_json,
    tree_to_json,
)

from .workload import (
    Workload,
    WorkloadSpec,
    ZipfParams,
    build_workload,
    cost_curve,
    derive_stream_seeds,
    exact_miss_probability,
    expected_search_cost,
    grid_optimal_index_ratio,
    load_manifest,
    miss_probability,
    optimal_index_ratio,
    save_manifest,
    workload_manifest,
    zipf_sample,
    zipf_weights,
)

from .storage import (
    INDEX_MAGIC,
    INDEX_VERSION,
    index_segment_sizes,
    load_index,
    save_index,
)

__version__ = "0.1.0"

__all__ = [
    "AccessCounter",
    "BuildParams",
    "DecisionTree",
    "DualIndex",
    "FEATURE_NAMES",
    "FeatureVector",
    "HotGraph",
    "HotIndexConfig",
    "INDEX_MAGIC",
    "INDEX_VERSION",
    "LABEL_CONTINUE",
    "LABEL_TERMINATE",
    "NeighborGraph",
    "ResultList",
    "SearchParams",
    "SearchTrace",
    "TrainingTrace",
    "TreeNode",
    "VERDICT_CONTINUE",
    "VERDICT_TERMINATE",
    "VectorDataset",
    "Workload",
    "WorkloadSpec",
    "ZipfParams",
    "__version__",
    "batch_distances",
    "beam_search",
    "brute_force_knn",
    "build_dual_index",
    "build_full_index",
    "build_hot_index",
    "build_knng",
    "build_workload",
    "collect_checkpoint_trace",
    "collect_training_traces",
    "constant_tree",
    "cost_curve",
    "dataset_digest",
    "derive_stream_seeds",
    "distance",
    "dual_beam_search",
    "dynamic_search",
    "effective_hot_knng_k",
    "exact_miss_probability",
    "expected_search_cost",
    "extract_features",
    "feature_importance",
    "generate_training_data",
    "grid_optimal_index_ratio",
    "index_segment_sizes",
    "k_smallest",
    "load_fvecs",
    "load_index",
    "load_ivecs",
    "load_manifest",
    "load_tree",
    "miss_probability",
    "optimal_index_ratio",
    "predict",
    "publish_hot",
    "recall_at_k",
    "record_access",
    "refresh_hot_if_due",
    "samples_from_traces",
    "save_index",
    "save_manifest",
    "save_training_csv",
    "save_tree",
    "select_entry_points",
    "select_hot_nodes",
    "serve_search",
    "should_rebuild",
    "ssg_prune",
    "synthetic_dataset",
    "train_tree",
    "tree_from_json",
    "tree_to_json",
    "workload_manifest",
    "write_fvecs",
    "write_ivecs",
    "zipf_sample",
    "zipf_weights",
]
