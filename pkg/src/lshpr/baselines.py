"""Single-valued distribution distances between embedding sets.

``fid`` is the Frechet distance between Gaussians fitted to the sample
moments: ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a S_b)^(1/2)). The
matrix square root is taken via a symmetric eigendecomposition with
negative eigenvalues clamped to zero, which stays stable for
near-singular sample covariances.

``kid`` is the block-averaged unbiased squared MMD with the polynomial
kernel (x.y/d + 1)^3; all i == j terms are excluded from every kernel
sum, so identical inputs score exactly zero and slightly negative values
are possible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .io import EmbeddingSet

DEFAULT_KID_BLOCK = 1000


@dataclass(frozen=True, eq=False)
class MomentSummary:
    """Sample mean and unbiased covariance of an embedding set."""

    mean: np.ndarray
    covariance: np.ndarray
    n: int


def moments(embeddings: EmbeddingSet) -> MomentSummary:
    if embeddings.n < 2:
        raise ValueError("need at least 2 points to estimate moments")
    pts = embeddings.points.astype(np.float64)
    mean = pts.mean(axis=0)
    cov = np.cov(pts, rowvar=False).reshape(embeddings.d, embeddings.d)
    cov = (cov + cov.T) / 2.0
    return MomentSummary(mean=mean, covariance=cov, n=embeddings.n)


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(matrix)
    root = (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.T
    return (root + root.T) / 2.0


def fid(a: EmbeddingSet, b: EmbeddingSet) -> float:
    """Frechet distance between Gaussian fits of the two sets (>= 0)."""
    if a.d != b.d:
        raise ValueError(f"dimension mismatch: {a.d} vs {b.d}")
    ma, mb = moments(a), moments(b)
    diff = ma.mean - mb.mean
    half = _psd_sqrt(ma.covariance)
    inner = half @ mb.covariance @ half
    inner = (inner + inner.T) / 2.0
    tr_sqrt = np.sqrt(np.clip(np.linalg.eigvalsh(inner), 0.0, None)).sum()
    value = float(diff @ diff + np.trace(ma.covariance) + np.trace(mb.covariance) - 2.0 * tr_sqrt)
    return max(0.0, value)


def _poly_kernel(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    d = x.shape[1]
    return ((x @ y.T) / d + 1.0) ** 3


def _mmd2_unbiased(x: np.ndarray, y: np.ndarray) -> float:
    # canonical orientation keeps kid(a, b) == kid(b, a) bit-exact
    if x.tobytes() > y.tobytes():
        x, y = y, x
    k_xx = _poly_kernel(x, x)
    k_yy = _poly_kernel(y, y)
    k_xy = _poly_kernel(x, y)
    m = x.shape[0]
    sum_xx = float(k_xx.sum() - np.trace(k_xx))
    sum_yy = float(k_yy.sum() - np.trace(k_yy))
    sum_xy = float(k_xy.sum() - np.trace(k_xy))
    return (sum_xx + sum_yy - 2.0 * sum_xy) / (m * (m - 1))


def kid(a: EmbeddingSet, b: EmbeddingSet, block_size: int | None = None) -> float:
    """Block-averaged unbiased squared MMD with a cubic polynomial kernel.

    Both sets are cut into disjoint consecutive blocks of ``block_size``
    points (default ``min(n, 1000)``); the remainder is dropped. May be
    slightly negative because the estimator is unbiased.
    """
    if a.d != b.d:
        raise ValueError(f"dimension mismatch: {a.d} vs {b.d}")
    smallest = min(a.n, b.n)
    if block_size is None:
        block_size = min(smallest, DEFAULT_KID_BLOCK)
    if block_size < 2:
        raise ValueError("block_size must be >= 2")
    if block_size > smallest:
        raise ValueError(f"block_size {block_size} exceeds smallest set size {smallest}")
    xs = a.points.astype(np.float64)
    ys = b.points.astype(np.float64)
    n_blocks = smallest // block_size
    values = [
        _mmd2_unbiased(
            xs[i * block_size : (i + 1) * block_size],
            ys[i * block_size : (i + 1) * block_size],
        )
        for i in range(n_blocks)
    ]
    return float(sum(values) / n_blocks)
