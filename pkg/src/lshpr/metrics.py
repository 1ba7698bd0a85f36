"""Precision and recall estimators over embedding sets.

Three estimators with one shared distance path:

* ``lsh``: a sample scores when its hash key occurs in the other set's
  table, so whole regions act as the manifold estimate.
* ``lsh_knn``: a sample scores when it falls inside the hypersphere of at
  least one same-region reference point; each reference point's radius is
  the distance to its k-th nearest neighbor within its own region.
* ``knn``: the classic estimator; radii are computed over the whole
  reference set and every sample is tested against every hypersphere.

Distances are Euclidean. Membership is decided on squared distances
against squared radii, which yields identical decisions without the
square roots. Precision counts evaluated (generated) samples supported
by the reference manifold; recall is the symmetric quantity with the
roles of the two sets swapped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hashing import HashTable, HyperplaneSet, build_table, choose_hyperplane_count, compute_keys, generate_hyperplanes
from .io import EmbeddingSet

ESTIMATORS = ("lsh", "lsh_knn", "knn")

# distance blocks are capped around 256 MB of float64
_BLOCK_ELEMS = 2**25
# small blocks use exact coordinate differences instead of the gram trick
_DIFF_LIMIT = 2**22


@dataclass(frozen=True)
class EvalConfig:
    """Evaluation parameters; ``hyperplanes="auto"`` derives the count from the data."""

    k: int = 3
    hyperplanes: int | str = "auto"
    runs: int = 3
    seed: int = 0
    estimator: str = "lsh_knn"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}, got {self.estimator!r}")
        if self.hyperplanes != "auto":
            if not isinstance(self.hyperplanes, int) or isinstance(self.hyperplanes, bool):
                raise ValueError('hyperplanes must be an int or "auto"')
            if self.hyperplanes < 0:
                raise ValueError("hyperplane count must be >= 0")


@dataclass
class ComparisonStats:
    """Distance-evaluation accounting. A query is one radius computation or one membership test."""

    distance_evals: int = 0
    queries: int = 0

    @property
    def mean_per_query(self) -> float:
        return self.distance_evals / self.queries if self.queries else 0.0

    def add(self, other: "ComparisonStats") -> None:
        self.distance_evals += other.distance_evals
        self.queries += other.queries


@dataclass
class PRScore:
    """Paired precision/recall with per-run values and cost accounting."""

    precision: float
    recall: float
    per_run: list[tuple[float, float]]
    estimator: str
    config: EvalConfig | None = None
    stats: ComparisonStats | None = None

    @classmethod
    def single(cls, precision, recall, estimator, stats=None, config=None):
        return cls(precision, recall, [(precision, recall)], estimator, config, stats)


@dataclass
class RealismReport:
    """Per-sample realism scores; ``inf`` marks samples coinciding with a reference point."""

    scores: np.ndarray
    k: int
    drop_largest_radii: bool = False
    config: EvalConfig | None = None


def _row_block(n_rows: int, n_cols: int) -> int:
    return max(1, min(n_rows, _BLOCK_ELEMS // max(n_cols, 1)))


def _sq_dist_block(x: np.ndarray, y: np.ndarray, y_sq: np.ndarray | None = None) -> np.ndarray:
    """Squared Euclidean distances between rows of x (small block) and y."""
    if x.shape[0] * y.shape[0] * x.shape[1] <= _DIFF_LIMIT:
        diff = x[:, None, :] - y[None, :, :]
        return np.einsum("ijk,ijk->ij", diff, diff)
    if y_sq is None:
        y_sq = (y * y).sum(axis=1)
    d2 = (x * x).sum(axis=1)[:, None] + y_sq[None, :] - 2.0 * (x @ y.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def _sq_radii(points: np.ndarray, k: int) -> np.ndarray:
    """Squared k-th nearest neighbor distance (excluding self) for each row.

    When fewer than k other points exist the farthest one is used, so a
    single point gets radius 0.
    """
    m = points.shape[0]
    if m == 1:
        return np.zeros(1)
    x = points.astype(np.float64)
    rank = min(k, m - 1)
    y_sq = (x * x).sum(axis=1)
    out = np.empty(m)
    step = _row_block(m, m)
    for lo in range(0, m, step):
        d2 = _sq_dist_block(x[lo : lo + step], x, y_sq)
        out[lo : lo + step] = np.partition(d2, rank, axis=1)[:, rank]
    return out


def _membership(eval_points: np.ndarray, ref_points: np.ndarray, ref_sq_radii: np.ndarray) -> np.ndarray:
    """Per eval point: does it fall inside at least one reference hypersphere."""
    m = eval_points.shape[0]
    if ref_points.shape[0] == 0:
        return np.zeros(m, dtype=bool)
    x = eval_points.astype(np.float64)
    y = ref_points.astype(np.float64)
    y_sq = (y * y).sum(axis=1)
    hit = np.empty(m, dtype=bool)
    step = _row_block(m, y.shape[0])
    for lo in range(0, m, step):
        d2 = _sq_dist_block(x[lo : lo + step], y, y_sq)
        hit[lo : lo + step] = (d2 <= ref_sq_radii[None, :]).any(axis=1)
    return hit


def _require_shared_planes(a: HashTable, b: HashTable) -> None:
    if not a.hyperplanes.matches(b.hyperplanes):
        raise ValueError("hash tables were built with different hyperplane sets")


def region_hit(key: int, table: HashTable) -> int:
    """1 when ``key`` occurs in the table's bucket map, else 0."""
    return 1 if int(key) in table.buckets else 0


def precision_recall_lsh(reference: HashTable, evaluated: HashTable) -> PRScore:
    """Region-membership precision/recall: shared keys only, no distances.

    ``reference`` holds the real samples and ``evaluated`` the generated
    ones; both tables must have been built with the same hyperplanes.
    """
    _require_shared_planes(reference, evaluated)
    stats = ComparisonStats(distance_evals=0, queries=reference.n + evaluated.n)
    p_hits = sum(g.size for key, g in evaluated.buckets.items() if key in reference.buckets)
    r_hits = sum(g.size for key, g in reference.buckets.items() if key in evaluated.buckets)
    return PRScore.single(p_hits / evaluated.n, r_hits / reference.n, "lsh", stats)


def _table_sq_radii(table: HashTable, k: int) -> tuple[np.ndarray, int]:
    pts = table.source.points
    sq = np.zeros(table.n)
    evals = 0
    for idx in table.buckets.values():
        evals += int(idx.size) * int(idx.size)
        if idx.size > 1:
            sq[idx] = _sq_radii(pts[idx], k)
    return sq, evals


def region_radii(table: HashTable, k: int) -> np.ndarray:
    """Hypersphere radius of every point, computed within its own bucket.

    The radius is the distance to the k-th nearest neighbor among the
    point's bucket mates; buckets with at most k other members fall back
    to the farthest in-bucket distance, and singletons get 0.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    sq, _ = _table_sq_radii(table, k)
    return np.sqrt(sq)


def sphere_hit(point: np.ndarray, ref_points: np.ndarray, ref_radii: np.ndarray) -> int:
    """1 when ``point`` lies within the hypersphere of some reference point.

    ``ref_points`` are the bucket members sharing the point's key and
    ``ref_radii`` their radii; an empty bucket yields 0.
    """
    refs = np.asarray(ref_points, dtype=np.float64)
    if refs.size == 0:
        return 0
    point = np.asarray(point, dtype=np.float64).reshape(1, -1)
    sq_radii = np.asarray(ref_radii, dtype=np.float64) ** 2
    return int(_membership(point, refs, sq_radii)[0])


def _side(eval_table: HashTable, ref_table: HashTable, ref_sq_radii: np.ndarray) -> tuple[int, int]:
    eval_pts = eval_table.source.points
    ref_pts = ref_table.source.points
    hits = 0
    evals = 0
    for key, group in eval_table.buckets.items():
        bucket = ref_table.buckets.get(key)
        if bucket is None:
            continue
        evals += int(group.size) * int(bucket.size)
        hits += int(_membership(eval_pts[group], ref_pts[bucket], ref_sq_radii[bucket]).sum())
    return hits, evals


def precision_recall_lsh_knn(reference: HashTable, evaluated: HashTable, k: int = 3) -> PRScore:
    """Hypersphere precision/recall restricted to same-region reference points."""
    if k < 1:
        raise ValueError("k must be >= 1")
    _require_shared_planes(reference, evaluated)
    stats = ComparisonStats()
    sq_ref, evals = _table_sq_radii(reference, k)
    stats.distance_evals += evals
    sq_eval, evals = _table_sq_radii(evaluated, k)
    stats.distance_evals += evals
    stats.queries += reference.n + evaluated.n

    p_hits, evals = _side(evaluated, reference, sq_ref)
    stats.distance_evals += evals
    r_hits, evals = _side(reference, evaluated, sq_eval)
    stats.distance_evals += evals
    stats.queries += evaluated.n + reference.n
    return PRScore.single(p_hits / evaluated.n, r_hits / reference.n, "lsh_knn", stats)


def precision_recall_knn(reference: EmbeddingSet, evaluated: EmbeddingSet, k: int = 3) -> PRScore:
    """Classic hypersphere precision/recall over the entire sets (no hashing)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if reference.d != evaluated.d:
        raise ValueError(f"dimension mismatch: {reference.d} vs {evaluated.d}")
    a, b = reference.points, evaluated.points
    sq_a = _sq_radii(a, k)
    sq_b = _sq_radii(b, k)
    p_hits = int(_membership(b, a, sq_a).sum())
    r_hits = int(_membership(a, b, sq_b).sum())
    n_a, n_b = reference.n, evaluated.n
    stats = ComparisonStats(
        distance_evals=n_a * n_a + n_b * n_b + n_b * n_a + n_a * n_b,
        queries=2 * (n_a + n_b),
    )
    return PRScore.single(p_hits / n_b, r_hits / n_a, "knn", stats)


def realism_scores(
    evaluated: EmbeddingSet,
    reference: HashTable,
    k: int = 3,
    drop_largest_radii: bool = False,
) -> RealismReport:
    """Per-sample realism: the best radius-to-distance ratio over same-region references.

    A score >= 1 means the sample sits inside at least one reference
    hypersphere in its region. Samples whose region holds no reference
    point score 0; a zero distance to a reference point marks the score
    as infinite. ``drop_largest_radii`` discards the half of the
    reference points with the largest radii before taking the maximum.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if evaluated.d != reference.source.d:
        raise ValueError(f"dimension mismatch: {evaluated.d} vs {reference.source.d}")
    sq_ref, _ = _table_sq_radii(reference, k)
    radii = np.sqrt(sq_ref)
    kept = np.ones(reference.n, dtype=bool)
    if drop_largest_radii:
        keep = reference.n - reference.n // 2
        kept[:] = False
        kept[np.argsort(radii, kind="stable")[:keep]] = True

    keys = compute_keys(evaluated.points, reference.hyperplanes)
    scores = np.zeros(evaluated.n)
    ref_pts = reference.source.points
    order = np.argsort(keys, kind="stable")
    cuts = np.flatnonzero(keys[order][1:] != keys[order][:-1]) + 1
    for group in np.split(order, cuts):
        bucket = reference.buckets.get(int(keys[group[0]]))
        if bucket is None:
            continue
        members = bucket[kept[bucket]]
        if members.size == 0:
            continue
        x = evaluated.points[group].astype(np.float64)
        y = ref_pts[members].astype(np.float64)
        y_sq = (y * y).sum(axis=1)
        member_radii = radii[members]
        step = _row_block(group.size, members.size)
        for lo in range(0, group.size, step):
            d2 = _sq_dist_block(x[lo : lo + step], y, y_sq)
            with np.errstate(divide="ignore"):
                ratios = np.where(d2 > 0.0, member_radii[None, :] / np.sqrt(d2), np.inf)
            scores[group[lo : lo + step]] = ratios.max(axis=1)
    return RealismReport(scores=scores, k=k, drop_largest_radii=drop_largest_radii)


def evaluate(real: EmbeddingSet, generated: EmbeddingSet, config: EvalConfig) -> PRScore:
    """Run the configured estimator with multi-run averaging.

    Run ``r`` draws its hyperplanes from ``config.seed + r``; the knn
    estimator uses no hyperplanes, so its runs are identical and it is
    computed once.
    """
    if real.d != generated.d:
        raise ValueError(f"dimension mismatch: {real.d} vs {generated.d}")
    if config.estimator == "knn":
        one = precision_recall_knn(real, generated, config.k)
        per_run = [(one.precision, one.recall)] * config.runs
        return PRScore(one.precision, one.recall, per_run, "knn", config, one.stats)

    count = (
        config.hyperplanes
        if isinstance(config.hyperplanes, int)
        else choose_hyperplane_count(real.n + generated.n)
    )
    per_run: list[tuple[float, float]] = []
    stats = ComparisonStats()
    for run in range(config.runs):
        planes = generate_hyperplanes(count, real.d, config.seed + run)
        table_real = build_table(real, planes)
        table_gen = build_table(generated, planes)
        if config.estimator == "lsh":
            one = precision_recall_lsh(table_real, table_gen)
        else:
            one = precision_recall_lsh_knn(table_real, table_gen, config.k)
        per_run.append((one.precision, one.recall))
        stats.add(one.stats)
    precision = sum(p for p, _ in per_run) / len(per_run)
    recall = sum(r for _, r in per_run) / len(per_run)
    return PRScore(precision, recall, per_run, config.estimator, config, stats)
