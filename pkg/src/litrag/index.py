"""Exact cosine top-k vector index with payload filtering and persistence.

Brute-force scan over a contiguous float32 matrix: at corpus scale
(thousands of articles, tens of thousands of chunks) exactness is cheap and
keeps evaluation deterministic. Scores are computed in float64; ties break
by ascending record id (insertion order).

File layout (little-endian): magic "LVXI", u32 version, u32 dim, u64 count,
count*dim float32 vectors, u64 payload length, JSON payload table, and a
trailing sha256 over everything before it.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import CorruptFile, DimensionMismatch, EmptyIndex, VersionMismatch

MAGIC = b"LVXI"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIQ")


class PayloadKind(str, Enum):
    ABSTRACT = "abstract"
    CHUNK = "chunk"


@dataclass(frozen=True)
class VectorRecord:
    record_id: int
    article_id: str
    payload_kind: PayloadKind
    payload_ref: str  # chunk_id or article_id


@dataclass(frozen=True)
class ScoredHit:
    record: VectorRecord
    score: float
    rank: int  # 1-based, contiguous


class VectorIndex:
    """Build with insert(); freeze implicitly by only reading afterwards."""

    def __init__(self, dim: int):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim
        self._rows: list[np.ndarray] = []
        self._records: list[VectorRecord] = []
        self._matrix: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._records)

    @property
    def records(self) -> list[VectorRecord]:
        return list(self._records)

    def insert(self, vector: np.ndarray, article_id: str, payload_kind: PayloadKind,
               payload_ref: str) -> int:
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self.dim,):
            raise DimensionMismatch(f"vector shape {vector.shape}, index dim {self.dim}")
        record_id = len(self._records)
        self._rows.append(vector.astype(np.float32))
        self._records.append(VectorRecord(record_id, article_id, payload_kind, payload_ref))
        self._matrix = None
        return record_id

    def _dense(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = (np.vstack(self._rows).astype(np.float64)
                            if self._rows else np.empty((0, self.dim)))
        return self._matrix

    def vector(self, record_id: int) -> np.ndarray:
        return self._rows[record_id].astype(np.float64)

    def top_k(self, query: np.ndarray, k: int,
              id_filter: set[str] | None = None) -> list[ScoredHit]:
        """The k highest-cosine records among those passing id_filter.

        Fewer than k are returned iff fewer candidates exist. Hits are
        sorted by score descending, ties by ascending record id, with
        contiguous 1-based ranks.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        if not self._records:
            raise EmptyIndex("index has no records")
        query = np.asarray(query, dtype=np.float64)
        if query.shape != (self.dim,):
            raise DimensionMismatch(f"query shape {query.shape}, index dim {self.dim}")

        if id_filter is None:
            candidates = np.arange(len(self._records))
        else:
            candidates = np.asarray(
                [i for i, r in enumerate(self._records) if r.article_id in id_filter],
                dtype=np.int64)
            if candidates.size == 0:
                return []
        scores = self._dense()[candidates] @ query
        order = np.lexsort((candidates, -scores))[:k]
        return [
            ScoredHit(self._records[int(candidates[j])], float(scores[j]), rank)
            for rank, j in enumerate(order, start=1)
        ]

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        matrix = (np.vstack(self._rows).astype("<f4")
                  if self._rows else np.empty((0, self.dim), dtype="<f4"))
        payload = json.dumps([
            [r.record_id, r.article_id, r.payload_kind.value, r.payload_ref]
            for r in self._records
        ]).encode("utf-8")
        body = (_HEADER.pack(MAGIC, FORMAT_VERSION, self.dim, len(self._records))
                + matrix.tobytes()
                + struct.pack("<Q", len(payload)) + payload)
        with open(path, "wb") as fh:
            fh.write(body)
            fh.write(hashlib.sha256(body).digest())

    @classmethod
    def load(cls, path: str | Path) -> "VectorIndex":
        data = Path(path).read_bytes()
        if len(data) < _HEADER.size + 32:
            raise CorruptFile(f"{path}: file too short")
        body, checksum = data[:-32], data[-32:]
        if hashlib.sha256(body).digest() != checksum:
            raise CorruptFile(f"{path}: checksum mismatch")
        magic, version, dim, count = _HEADER.unpack_from(body, 0)
        if magic != MAGIC:
            raise CorruptFile(f"{path}: bad magic")
        if version != FORMAT_VERSION:
            raise VersionMismatch(f"{path}: format version {version}, "
                                  f"supported {FORMAT_VERSION}")
        offset = _HEADER.size
        vec_bytes = count * dim * 4
        if len(body) < offset + vec_bytes + 8:
            raise CorruptFile(f"{path}: truncated vector block")
        matrix = np.frombuffer(body, dtype="<f4", count=count * dim,
                               offset=offset).reshape(count, dim)
        offset += vec_bytes
        (payload_len,) = struct.unpack_from("<Q", body, offset)
        offset += 8
        if len(body) != offset + payload_len:
            raise CorruptFile(f"{path}: payload size mismatch")
        try:
            table = json.loads(body[offset:offset + payload_len].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CorruptFile(f"{path}: unreadable payload table") from exc

        index = cls(dim)
        for i, (record_id, article_id, kind, ref) in enumerate(table):
            if record_id != i:
                raise CorruptFile(f"{path}: non-sequential record ids")
            index._rows.append(np.array(matrix[i], dtype=np.float32))
            index._records.append(
                VectorRecord(record_id, article_id, PayloadKind(kind), ref))
        return index
