"""Post-training weight compression schemes as pure tensor transforms.

Four schemes, all operating on flat float32 value arrays:

* ``lq``: symmetric linear quantization over the full dynamic range;
  b bits give at most 2^b - 1 distinct levels.
* ``mcq``: Monte Carlo quantization; importance sampling on the CDF of
  the absolute weights assigns each weight a hit count, unsampled
  weights are pruned to zero, and total L1 mass is preserved.
* ``ocs_lq``: the largest-magnitude weights are split in two (halved in
  place with a halved copy appended), then linearly quantized.
* ``aciq_lq``: values are clipped at a threshold minimizing the
  empirical quantization MSE, then linearly quantized at that range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .io import WeightTensor

SCHEMES = ("lq", "mcq", "ocs_lq", "aciq_lq")

# golden-section stops when the bracket shrinks below this fraction of max|x|
_CLIP_SEARCH_TOL = 1e-4
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# float32 payloads make wider codes meaningless and break lattice idempotence
MAX_BITS = 24


@dataclass(frozen=True)
class CompressionSpec:
    """Scheme selection plus the parameters that scheme needs."""

    scheme: str
    bits: int | None = None
    mcq_samples: int | None = None
    expand_ratio: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.scheme in ("lq", "ocs_lq", "aciq_lq"):
            if self.bits is None or not 2 <= self.bits <= MAX_BITS:
                raise ValueError(f"scheme {self.scheme!r} needs bits in [2, {MAX_BITS}]")
        if self.scheme == "mcq":
            if self.mcq_samples is None or self.mcq_samples < 1:
                raise ValueError("scheme 'mcq' needs mcq_samples >= 1")
        if not 0.0 <= self.expand_ratio <= 1.0:
            raise ValueError("expand_ratio must lie in [0, 1]")


@dataclass
class CompressionReport:
    """Audit numbers recomputable from the input/output tensor pair."""

    distinct_levels: int
    pruned_fraction: float
    max_abs_error: float
    l1_in: float
    l1_out: float
    clip_threshold: float | None = None


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


def _quantize_array(values: np.ndarray, bits: int, scale: float) -> np.ndarray:
    """Map float values onto the symmetric lattice of 2^bits - 1 levels over [-scale, scale].

    Arithmetic is float64 with the reconstruction written as
    (codes * scale) / levels so the extreme code maps back to exactly
    +-scale, which makes the transform idempotent on its own output.
    """
    q = float(2 ** (bits - 1) - 1)
    v = values.astype(np.float64)
    codes = _round_half_away((v * q) / scale)
    return ((codes * scale) / q).astype(np.float32)


def linear_quantize(tensor: WeightTensor, bits: int) -> WeightTensor:
    """Symmetric linear quantization over the tensor's full dynamic range.

    An all-zero tensor has no range and is returned unchanged.
    """
    if not 2 <= bits <= MAX_BITS:
        raise ValueError(f"bits must lie in [2, {MAX_BITS}]")
    scale = float(np.max(np.abs(tensor.values)))
    if scale == 0.0:
        return WeightTensor(values=tensor.values.copy(), shape=tensor.shape, name=tensor.name)
    out = _quantize_array(tensor.values, bits, scale)
    return WeightTensor(values=out, shape=tensor.shape, name=tensor.name)


def mcq_from_uniforms(tensor: WeightTensor, uniforms: np.ndarray) -> WeightTensor:
    """Monte Carlo quantization driven by explicit uniform [0, 1) samples.

    The CDF of normalized absolute weights is sampled once per variate;
    weight j receives sign(x_j) * hits_j * (sum|x| / N), so weights never
    hit become exactly zero and total L1 mass is conserved.
    """
    u = np.asarray(uniforms, dtype=np.float64).reshape(-1)
    if u.size < 1:
        raise ValueError("need at least one uniform sample")
    v = tensor.values.astype(np.float64)
    mags = np.abs(v)
    total = float(mags.sum())
    if total == 0.0:
        raise ValueError("cannot sample an all-zero tensor")
    cdf = np.cumsum(mags) / total
    idx = np.searchsorted(cdf, u, side="right")
    # float rounding can leave cdf[-1] a hair below 1.0
    np.minimum(idx, v.size - 1, out=idx)
    hits = np.bincount(idx, minlength=v.size).astype(np.float64)
    out = (np.sign(v) * hits * (total / u.size)).astype(np.float32)
    return WeightTensor(values=out, shape=tensor.shape, name=tensor.name)


def mcq(tensor: WeightTensor, samples: int, seed: int = 0) -> WeightTensor:
    """Monte Carlo quantization with ``samples`` seeded uniform draws."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    return mcq_from_uniforms(tensor, rng.random(samples))


def split_outliers(tensor: WeightTensor, expand_ratio: float = 0.01) -> WeightTensor:
    """Halve the ceil(ratio * n) largest-magnitude weights, appending the twin halves.

    The output is flat with length n + ceil(ratio * n); the element sum is
    preserved exactly and the dynamic range can only shrink.
    """
    if not 0.0 <= expand_ratio <= 1.0:
        raise ValueError("expand_ratio must lie in [0, 1]")
    values = tensor.values
    splits = math.ceil(expand_ratio * values.size)
    if splits == 0:
        return WeightTensor(values=values.copy(), shape=tensor.shape, name=tensor.name)
    chosen = np.argsort(-np.abs(values), kind="stable")[:splits]
    halves = values[chosen] / np.float32(2.0)
    out = values.copy()
    out[chosen] = halves
    out = np.concatenate([out, halves])
    return WeightTensor(values=out, shape=(out.size,), name=tensor.name)


def fit_clip_distribution(tensor: WeightTensor) -> str:
    """Pick the closer noise model, ``"gaussian"`` or ``"laplacian"``, by excess kurtosis."""
    v = tensor.values.astype(np.float64)
    centered = v - v.mean()
    m2 = float((centered**2).mean())
    if m2 == 0.0:
        raise ValueError("constant tensor has no distribution shape")
    kurt = float((centered**4).mean()) / (m2 * m2) - 3.0
    return "gaussian" if abs(kurt) <= abs(kurt - 3.0) else "laplacian"


def _clip_quant_mse(values: np.ndarray, bits: int, alpha: float) -> float:
    clipped = np.clip(values, -alpha, alpha)
    return float(((values - _quantize_array(clipped, bits, alpha)) ** 2).mean())


def clip_threshold(tensor: WeightTensor, bits: int) -> float:
    """Clip level minimizing the empirical MSE of clip-then-quantize.

    Golden-section search over (0, max|x|], then the better of the search
    result and the unclipped endpoint, so clipping never loses to plain
    linear quantization on the tensor it was fitted to.
    """
    if not 2 <= bits <= MAX_BITS:
        raise ValueError(f"bits must lie in [2, {MAX_BITS}]")
    v = tensor.values.astype(np.float64)
    hi = float(np.abs(v).max())
    if hi == 0.0 or float(v.max()) == float(v.min()):
        raise ValueError("constant tensor cannot be clipped")
    fit_clip_distribution(tensor)  # validates shape; model informs reporting only
    lo = hi * 1e-6
    tol = hi * _CLIP_SEARCH_TOL
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = _clip_quant_mse(v, bits, c)
    fd = _clip_quant_mse(v, bits, d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = _clip_quant_mse(v, bits, c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = _clip_quant_mse(v, bits, d)
    best = (a + b) / 2.0
    if _clip_quant_mse(v, bits, hi) <= _clip_quant_mse(v, bits, best):
        return hi
    return best


def clip_and_quantize(tensor: WeightTensor, bits: int) -> WeightTensor:
    """Clip at the fitted threshold, then linearly quantize over the clipped range."""
    alpha = clip_threshold(tensor, bits)
    clipped = np.clip(tensor.values.astype(np.float64), -alpha, alpha)
    out = np.clip(_quantize_array(clipped, bits, alpha), -alpha, alpha)
    return WeightTensor(values=out, shape=tensor.shape, name=tensor.name)


def compress(tensor: WeightTensor, spec: CompressionSpec) -> tuple[WeightTensor, CompressionReport]:
    """Apply the selected scheme and recompute the audit report from the result.

    ``max_abs_error`` compares against the input values except for
    ``ocs_lq``, where it measures the quantization step against the split
    tensor (the lengths differ from the input after splitting).
    """
    reference = tensor
    threshold: float | None = None
    if spec.scheme == "lq":
        out = linear_quantize(tensor, spec.bits)
    elif spec.scheme == "mcq":
        out = mcq(tensor, spec.mcq_samples, spec.seed)
    elif spec.scheme == "ocs_lq":
        reference = split_outliers(tensor, spec.expand_ratio)
        out = linear_quantize(reference, spec.bits)
    else:
        threshold = clip_threshold(tensor, spec.bits)
        clipped = np.clip(tensor.values.astype(np.float64), -threshold, threshold)
        values = np.clip(_quantize_array(clipped, spec.bits, threshold), -threshold, threshold)
        out = WeightTensor(values=values, shape=tensor.shape, name=tensor.name)

    err = np.abs(out.values.astype(np.float64) - reference.values.astype(np.float64))
    report = CompressionReport(
        distinct_levels=int(np.unique(out.values).size),
        pruned_fraction=float(np.count_nonzero(out.values == 0.0) / out.size),
        max_abs_error=float(err.max()),
        l1_in=float(np.abs(tensor.values.astype(np.float64)).sum()),
        l1_out=float(np.abs(out.values.astype(np.float64)).sum()),
        clip_threshold=threshold,
    )
    return out, report
