"""File formats for embedding sets and weight tensors.

Binary layouts (all little-endian):

* embedding file: magic ``EMB1``, uint32 ``n``, uint32 ``d``, then
  ``n * d`` float32 values in row-major order.
* tensor file: magic ``TEN1``, uint32 rank ``r``, ``r`` uint32 extents,
  then ``prod(extents)`` float32 values.
* CSV: one row per point, comma-separated decimals, no header. Written
  with 9 significant digits so every float32 value round-trips exactly.

The binary formats are the canonical interchange and round-trip every
finite float32 payload bit-exactly.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

EMBEDDING_MAGIC = b"EMB1"
TENSOR_MAGIC = b"TEN1"


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    """An n x d matrix of float32 feature vectors with a free-form label."""

    points: np.ndarray
    label: str = ""

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float32)
        if pts.ndim != 2:
            raise ValueError(f"points must be a 2-D matrix, got shape {pts.shape}")
        n, d = pts.shape
        if n < 1 or d < 1:
            raise ValueError(f"embedding set must be at least 1x1, got {n}x{d}")
        bad = np.argwhere(~np.isfinite(pts))
        if bad.size:
            r, c = bad[0]
            raise ValueError(f"non-finite value at row {r}, column {c}")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True, eq=False)
class WeightTensor:
    """A flat float32 value array plus shape metadata and a name."""

    values: np.ndarray
    shape: tuple[int, ...]
    name: str = ""

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float32).reshape(-1)
        shape = tuple(int(s) for s in self.shape)
        if len(shape) == 0:
            raise ValueError("tensor shape must have rank >= 1")
        if any(s < 1 for s in shape):
            raise ValueError(f"tensor extents must be positive, got {shape}")
        count = 1
        for s in shape:
            count *= s
        if count != vals.size:
            raise ValueError(
                f"shape/length mismatch: shape {shape} needs {count} values, got {vals.size}"
            )
        bad = np.flatnonzero(~np.isfinite(vals))
        if bad.size:
            raise ValueError(f"non-finite value at index {bad[0]}")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "shape", shape)

    @property
    def size(self) -> int:
        return self.values.size


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    """Write bytes to ``path`` via a temp file + rename so partial files never remain."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def _read_exact(path: str | Path, magic: bytes) -> bytes:
    blob = Path(path).read_bytes()
    if len(blob) < len(magic) or blob[: len(magic)] != magic:
        raise ValueError(f"{path}: malformed header (expected magic {magic!r})")
    return blob


def save_embeddings(embeddings: EmbeddingSet, path: str | Path, format: str = "binary") -> None:
    """Persist an embedding set as ``binary`` (EMB1) or ``csv``."""
    if format == "binary":
        header = EMBEDDING_MAGIC + struct.pack("<II", embeddings.n, embeddings.d)
        payload = embeddings.points.astype("<f4").tobytes()
        atomic_write_bytes(path, header + payload)
    elif format == "csv":
        lines = [
            ",".join(f"{float(v):.9g}" for v in row) for row in embeddings.points
        ]
        atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("ascii"))
    else:
        raise ValueError(f"unknown embedding format {format!r}")


def load_embeddings(path: str | Path, format: str = "binary", label: str = "") -> EmbeddingSet:
    """Load and validate an embedding set from disk."""
    if format == "binary":
        blob = _read_exact(path, EMBEDDING_MAGIC)
        if len(blob) < 12:
            raise ValueError(f"{path}: malformed header (truncated)")
        n, d = struct.unpack_from("<II", blob, 4)
        expected = 12 + n * d * 4
        if len(blob) != expected:
            raise ValueError(
                f"{path}: payload length mismatch, expected {expected} bytes, got {len(blob)}"
            )
        pts = np.frombuffer(blob, dtype="<f4", offset=12).reshape(n, d) if n * d else None
        if pts is None:
            raise ValueError(f"{path}: empty embedding set")
        return EmbeddingSet(points=pts.copy(), label=label)
    if format == "csv":
        rows: list[list[float]] = []
        with open(path, "r", encoding="ascii") as fh:
            for lineno, line in enumerate(fh):
                line = line.strip()
                if not line:
                    continue
                try:
                    rows.append([float(tok) for tok in line.split(",")])
                except ValueError as exc:
                    raise ValueError(f"{path}: bad value on row {lineno}: {exc}") from None
        if not rows:
            raise ValueError(f"{path}: empty embedding set")
        width = len(rows[0])
        for i, row in enumerate(rows):
            if len(row) != width:
                raise ValueError(
                    f"{path}: dimension mismatch on row {i}: expected {width} columns, got {len(row)}"
                )
        return EmbeddingSet(points=np.array(rows, dtype=np.float32), label=label)
    raise ValueError(f"unknown embedding format {format!r}")


def save_tensor(tensor: WeightTensor, path: str | Path) -> None:
    """Persist a weight tensor as a TEN1 binary file."""
    header = TENSOR_MAGIC + struct.pack("<I", len(tensor.shape))
    header += struct.pack(f"<{len(tensor.shape)}I", *tensor.shape)
    atomic_write_bytes(path, header + tensor.values.astype("<f4").tobytes())


def load_tensor(path: str | Path, name: str = "") -> WeightTensor:
    """Load and validate a weight tensor from a TEN1 binary file."""
    blob = _read_exact(path, TENSOR_MAGIC)
    if len(blob) < 8:
        raise ValueError(f"{path}: malformed header (truncated)")
    (rank,) = struct.unpack_from("<I", blob, 4)
    if rank == 0:
        raise ValueError(f"{path}: tensor rank must be >= 1")
    if len(blob) < 8 + 4 * rank:
        raise ValueError(f"{path}: malformed header (truncated extents)")
    shape = struct.unpack_from(f"<{rank}I", blob, 8)
    count = 1
    for s in shape:
        count *= s
    expected = 8 + 4 * rank + count * 4
    if len(blob) != expected:
        raise ValueError(
            f"{path}: payload length mismatch, expected {expected} bytes, got {len(blob)}"
        )
    values = np.frombuffer(blob, dtype="<f4", offset=8 + 4 * rank)
    return WeightTensor(values=values.copy(), shape=shape, name=name)
