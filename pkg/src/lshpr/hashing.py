"""Random-hyperplane hashing: plane generation, bit keys, and hash tables.

Each hyperplane is a normal vector drawn from a per-coordinate standard
normal plus a scalar offset drawn uniformly from [0, 1). A point's key
collects one bit per hyperplane: bit ``i`` is 1 when the projection onto
hyperplane ``i`` (dot product plus offset) is >= 0. Keys are packed into
a single unsigned integer with bit 0 least significant, which caps the
number of hyperplanes at 64.

Hyperplane file layout (little-endian): magic ``HYP1``, uint32 count,
uint32 dimension, uint64 seed, then ``count * (dimension + 1)`` float32
values (normals row-major, then offsets).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .io import EmbeddingSet, atomic_write_bytes

HYPERPLANE_MAGIC = b"HYP1"
MAX_KEY_BITS = 64


@dataclass(frozen=True, eq=False)
class HyperplaneSet:
    """A fixed family of random hyperplanes shared by every hashed set."""

    normals: np.ndarray  # (count, dim) float32
    offsets: np.ndarray  # (count,) float32
    seed: int = 0

    def __post_init__(self):
        normals = np.ascontiguousarray(self.normals, dtype=np.float32)
        offsets = np.ascontiguousarray(self.offsets, dtype=np.float32)
        if normals.ndim != 2:
            raise ValueError(f"normals must be 2-D, got shape {normals.shape}")
        count, dim = normals.shape
        if count > MAX_KEY_BITS:
            raise ValueError(f"at most {MAX_KEY_BITS} hyperplanes supported, got {count}")
        if dim < 1:
            raise ValueError("hyperplane dimension must be >= 1")
        if offsets.shape != (count,):
            raise ValueError(f"offsets must have shape ({count},), got {offsets.shape}")
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def count(self) -> int:
        return self.normals.shape[0]

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    def matches(self, other: "HyperplaneSet") -> bool:
        return (
            self is other
            or (
                np.array_equal(self.normals, other.normals)
                and np.array_equal(self.offsets, other.offsets)
            )
        )


def generate_hyperplanes(count: int, dim: int, seed: int) -> HyperplaneSet:
    """Draw ``count`` random hyperplanes in ``dim`` dimensions from a seeded generator.

    The same (seed, count, dim) always yields bit-identical planes.
    """
    if count < 0:
        raise ValueError("hyperplane count must be >= 0")
    if count > MAX_KEY_BITS:
        raise ValueError(f"at most {MAX_KEY_BITS} hyperplanes supported, got {count}")
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    rng = np.random.default_rng(seed)
    normals = rng.standard_normal((count, dim), dtype=np.float32)
    offsets = rng.random(count, dtype=np.float32)
    return HyperplaneSet(normals=normals, offsets=offsets, seed=seed)


def hash_point(point: np.ndarray, normal: np.ndarray, offset: float) -> int:
    """Return 1 when the projection of ``point`` onto one hyperplane is >= 0, else 0.

    A projection of exactly zero hashes to 1.
    """
    point = np.asarray(point, dtype=np.float64).reshape(-1)
    normal = np.asarray(normal, dtype=np.float64).reshape(-1)
    if point.shape != normal.shape:
        raise ValueError(f"dimension mismatch: point {point.shape} vs normal {normal.shape}")
    return 1 if float(point @ normal) + float(offset) >= 0.0 else 0


def _projections(points: np.ndarray, planes: HyperplaneSet) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    return pts @ planes.normals.astype(np.float64).T + planes.offsets.astype(np.float64)


def compute_keys(points: np.ndarray, planes: HyperplaneSet) -> np.ndarray:
    """Hash each row of ``points`` against all hyperplanes, packed into uint64 keys."""
    pts = np.asarray(points)
    if pts.ndim != 2 or pts.shape[1] != planes.dim:
        raise ValueError(
            f"dimension mismatch: points {pts.shape} vs hyperplanes of dim {planes.dim}"
        )
    if planes.count == 0:
        return np.zeros(pts.shape[0], dtype=np.uint64)
    bits = (_projections(pts, planes) >= 0.0).astype(np.uint64)
    weights = np.uint64(1) << np.arange(planes.count, dtype=np.uint64)
    return (bits * weights).sum(axis=1, dtype=np.uint64)


def compute_key(point: np.ndarray, planes: HyperplaneSet) -> int:
    """Hash one point to its packed key (bit i = hash against hyperplane i)."""
    point = np.asarray(point).reshape(1, -1)
    return int(compute_keys(point, planes)[0])


@dataclass(frozen=True, eq=False)
class HashTable:
    """Bucketed point indices of one embedding set under one hyperplane family.

    ``buckets`` maps each occurring key to the indices that hash to it, in
    input order; every index of the source set appears in exactly one bucket.
    """

    buckets: dict[int, np.ndarray]
    keys: np.ndarray  # (n,) uint64, key of every source point
    source: EmbeddingSet
    hyperplanes: HyperplaneSet

    @property
    def n(self) -> int:
        return self.source.n


def build_table(embeddings: EmbeddingSet, planes: HyperplaneSet) -> HashTable:
    """Hash every point of ``embeddings`` and group indices by key."""
    if embeddings.d != planes.dim:
        raise ValueError(
            f"dimension mismatch: embeddings are {embeddings.d}-D, hyperplanes {planes.dim}-D"
        )
    keys = compute_keys(embeddings.points, planes)
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    cuts = np.flatnonzero(sorted_keys[1:] != sorted_keys[:-1]) + 1
    buckets = {int(keys[idx[0]]): idx for idx in np.split(order, cuts)}
    return HashTable(buckets=buckets, keys=keys, source=embeddings, hyperplanes=planes)


def choose_hyperplane_count(n_total: int) -> int:
    """Floor of log2 of the combined set size, capped at the key width."""
    if n_total < 1:
        raise ValueError("n_total must be >= 1")
    return min(int(n_total).bit_length() - 1, MAX_KEY_BITS)


def save_hyperplanes(planes: HyperplaneSet, path: str | Path) -> None:
    """Persist a hyperplane family as a HYP1 binary file (bit-exact round trip)."""
    header = HYPERPLANE_MAGIC + struct.pack("<IIQ", planes.count, planes.dim, planes.seed)
    payload = planes.normals.astype("<f4").tobytes() + planes.offsets.astype("<f4").tobytes()
    atomic_write_bytes(path, header + payload)


def load_hyperplanes(path: str | Path) -> HyperplaneSet:
    """Load a hyperplane family from a HYP1 binary file."""
    blob = Path(path).read_bytes()
    if len(blob) < 4 or blob[:4] != HYPERPLANE_MAGIC:
        raise ValueError(f"{path}: malformed header (expected magic {HYPERPLANE_MAGIC!r})")
    if len(blob) < 20:
        raise ValueError(f"{path}: malformed header (truncated)")
    count, dim, seed = struct.unpack_from("<IIQ", blob, 4)
    expected = 20 + count * (dim + 1) * 4
    if len(blob) != expected:
        raise ValueError(
            f"{path}: payload length mismatch, expected {expected} bytes, got {len(blob)}"
        )
    flat = np.frombuffer(blob, dtype="<f4", offset=20)
    normals = flat[: count * dim].reshape(count, dim).copy()
    offsets = flat[count * dim :].copy()
    return HyperplaneSet(normals=normals, offsets=offsets, seed=seed)
