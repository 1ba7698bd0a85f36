"""Hash-based precision/recall evaluation and post-training weight compression."""

from .analysis import (
    BenchmarkRow,
    ParetoPoint,
    ScoreSeries,
    pareto_frontier,
    pearson,
    scaling_benchmark,
    spearman,
)
from .baselines import MomentSummary, fid, kid, moments
from .compress import (
    CompressionReport,
    CompressionSpec,
    clip_and_quantize,
    clip_threshold,
    compress,
    fit_clip_distribution,
    linear_quantize,
    mcq,
    mcq_from_uniforms,
    split_outliers,
)
from .hashing import (
    HashTable,
    HyperplaneSet,
    build_table,
    choose_hyperplane_count,
    compute_key,
    compute_keys,
    generate_hyperplanes,
    hash_point,
    load_hyperplanes,
    save_hyperplanes,
)
from .io import (
    EmbeddingSet,
    WeightTensor,
    load_embeddings,
    load_tensor,
    save_embeddings,
    save_tensor,
)
from .metrics import (
    ComparisonStats,
    EvalConfig,
    PRScore,
    RealismReport,
    evaluate,
    precision_recall_knn,
    precision_recall_lsh,
    precision_recall_lsh_knn,
    realism_scores,
    region_hit,
    region_radii,
    sphere_hit,
)

__version__ = "0.1.0"
