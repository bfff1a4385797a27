"""Embedding retrieval, evidence-based classification, and evaluation."""

from .contrastive import (
    ContrastiveError,
    LossValue,
    TrainConfig,
    TrainResult,
    UniclBatch,
    finite_diff_check,
    infonce_loss,
    similarity_matrix,
    toy_train,
    unicl_loss,
)
from .corpus import (
    Corpus,
    CorpusError,
    EmbeddingRecord,
    SplitResult,
    fnv1a64,
    hu_window,
    load_corpus,
    load_snapshot,
    record_to_json,
    save_snapshot,
    seeded_permutation,
    split_corpus,
)
from .decision import (
    DEFAULT_CLASSIFY_K,
    DEFAULT_REGRESS_K,
    ClassifierHead,
    ClassScores,
    DecisionError,
    KTuneResult,
    classify_knn,
    head_from_corpus,
    load_head,
    regress_knn,
    save_head,
    softmax,
    tune_k,
    zeroshot_classify,
)
from .evaluation import EvaluationRun, run_evaluation, write_report
from .index import (
    IndexError_,
    NeighborHit,
    VectorIndex,
    batch_search,
    brute_force_search,
    build_index,
    search,
)
from .metrics import (
    AGE_BUCKETS,
    GENDER_GROUPS,
    FairnessReport,
    FairnessRow,
    MaucResult,
    MetricError,
    RocCurve,
    RocPoint,
    accuracy,
    auc,
    balanced_accuracy,
    fairness_report,
    mauc,
    mean_abs_months,
    roc_curve,
)
from .synthetic import ClusterSpec, batch_sampler, cluster_corpus, sample_features
from .volumes import (
    AGGREGATIONS,
    VolumeEmbedding,
    VolumeError,
    VolumeIndex,
    aggregate_slices,
    average_precision,
    build_volume_index,
    flag_relevance,
    precision_at_k,
    retrieve_volumes,
    stage_relevance,
)

__version__ = "0.1.0"

__all__ = [
    "AGE_BUCKETS",
    "AGGREGATIONS",
    "ClassScores",
    "ClassifierHead",
    "ClusterSpec",
    "ContrastiveError",
    "Corpus",
    "CorpusError",
    "DEFAULT_CLASSIFY_K",
    "DEFAULT_REGRESS_K",
    "DecisionError",
    "EmbeddingRecord",
    "EvaluationRun",
    "FairnessReport",
    "FairnessRow",
    "GENDER_GROUPS",
    "IndexError_",
    "KTuneResult",
    "LossValue",
    "MaucResult",
    "MetricError",
    "NeighborHit",
    "RocCurve",
    "RocPoint",
    "SplitResult",
    "TrainConfig",
    "TrainResult",
    "UniclBatch",
    "VectorIndex",
    "VolumeEmbedding",
    "VolumeError",
    "VolumeIndex",
    "accuracy",
    "aggregate_slices",
    "auc",
    "average_precision",
    "balanced_accuracy",
    "batch_sampler",
    "batch_search",
    "brute_force_search",
    "build_index",
    "build_volume_index",
    "classify_knn",
    "cluster_corpus",
    "fairness_report",
    "finite_diff_check",
    "flag_relevance",
    "fnv1a64",
    "head_from_corpus",
    "hu_window",
    "infonce_loss",
    "load_corpus",
    "load_head",
    "load_snapshot",
    "mauc",
    "mean_abs_months",
    "precision_at_k",
    "record_to_json",
    "regress_knn",
    "retrieve_volumes",
    "roc_curve",
    "run_evaluation",
    "sample_features",
    "save_head",
    "save_snapshot",
    "search",
    "seeded_permutation",
    "similarity_matrix",
    "softmax",
    "split_corpus",
    "stage_relevance",
    "toy_train",
    "tune_k",
    "unicl_loss",
    "write_report",
    "zeroshot_classify",
]
