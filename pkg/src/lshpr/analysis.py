"""Correlation study, Pareto frontier extraction, and the scaling benchmark."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .io import EmbeddingSet
from .metrics import (
    precision_recall_knn,
    precision_recall_lsh,
    precision_recall_lsh_knn,
)
from .hashing import build_table, choose_hyperplane_count, generate_hyperplanes


@dataclass(frozen=True, eq=False)
class ScoreSeries:
    """Parallel condition labels and score values (e.g. one metric across bit-widths)."""

    labels: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        labels = tuple(str(t) for t in self.labels)
        if values.ndim != 1 or len(labels) != values.size:
            raise ValueError("labels and values must be parallel 1-D sequences")
        if values.size < 2:
            raise ValueError("need at least 2 scores")
        if np.isnan(values).any():
            raise ValueError("scores must not contain NaN")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class ParetoPoint:
    precision: float
    recall: float
    tag: str = ""

    def __post_init__(self):
        if not (0.0 <= self.precision <= 1.0 and 0.0 <= self.recall <= 1.0):
            raise ValueError("precision and recall must lie in [0, 1]")


@dataclass(frozen=True)
class BenchmarkRow:
    """One estimator run at one set size; wall time is informative only."""

    n: int
    estimator: str
    wall_time: float
    distance_evals: int
    queries: int

    @property
    def mean_per_query(self) -> float:
        return self.distance_evals / self.queries if self.queries else 0.0


def pearson(a: ScoreSeries, b: ScoreSeries) -> float:
    """Product-moment correlation of the two score series."""
    if a.values.size != b.values.size:
        raise ValueError("series lengths differ")
    xc = a.values - a.values.mean()
    yc = b.values - b.values.mean()
    denom = float(np.sqrt((xc * xc).sum() * (yc * yc).sum()))
    if denom == 0.0:
        raise ValueError("zero variance series has no correlation")
    return float(np.clip((xc * yc).sum() / denom, -1.0, 1.0))


def spearman(a: ScoreSeries, b: ScoreSeries) -> float:
    """Rank correlation: pearson over average-ranked values (ties share the mean rank)."""
    ranked_a = ScoreSeries(a.labels, rankdata(a.values, method="average"))
    ranked_b = ScoreSeries(b.labels, rankdata(b.values, method="average"))
    return pearson(ranked_a, ranked_b)


def pareto_frontier(points: list[ParetoPoint]) -> list[ParetoPoint]:
    """Points not strictly dominated, sorted by precision descending.

    A point is dominated when another is >= in both coordinates and > in
    at least one; exact duplicates never dominate each other, so they are
    all kept.
    """
    if not points:
        raise ValueError("need at least one point")
    kept = [
        p
        for p in points
        if not any(
            q.precision >= p.precision
            and q.recall >= p.recall
            and (q.precision > p.precision or q.recall > p.recall)
            for q in points
        )
    ]
    return sorted(kept, key=lambda p: (-p.precision, -p.recall, p.tag))


def scaling_benchmark(
    dim: int,
    sizes: list[int],
    estimators: list[str],
    seed: int = 0,
    k: int = 3,
) -> list[BenchmarkRow]:
    """Time each estimator on synthetic standard-normal pairs of growing size.

    For each size n, one real and one generated set of n points are drawn
    (derived deterministically from ``seed`` and n), hashed with
    floor(log2(2n)) shared hyperplanes, and run through each estimator
    once. Distance-evaluation counts are the hardware-independent output;
    wall times depend on the machine.
    """
    if sorted(sizes) != list(sizes):
        raise ValueError("sizes must be ascending")
    for estimator in estimators:
        if estimator not in ("lsh", "lsh_knn", "knn"):
            raise ValueError(f"unknown estimator {estimator!r}")
    rows: list[BenchmarkRow] = []
    for i, n in enumerate(sizes):
        rng = np.random.default_rng([seed, n])
        real = EmbeddingSet(rng.standard_normal((n, dim)).astype(np.float32), label="real")
        gen = EmbeddingSet(rng.standard_normal((n, dim)).astype(np.float32), label="generated")
        planes = generate_hyperplanes(choose_hyperplane_count(2 * n), dim, seed + i)
        table_real = build_table(real, planes)
        table_gen = build_table(gen, planes)
        for estimator in estimators:
            start = time.perf_counter()
            if estimator == "lsh":
                score = precision_recall_lsh(table_real, table_gen)
            elif estimator == "lsh_knn":
                score = precision_recall_lsh_knn(table_real, table_gen, k)
            else:
                score = precision_recall_knn(real, gen, k)
            elapsed = time.perf_counter() - start
            rows.append(
                BenchmarkRow(
                    n=n,
                    estimator=estimator,
                    wall_time=elapsed,
                    distance_evals=score.stats.distance_evals,
                    queries=score.stats.queries,
                )
            )
    return rows
