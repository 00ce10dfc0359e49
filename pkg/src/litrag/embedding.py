"""Embedding providers: HTTP service client, deterministic offline mock,
disk cache, and cosine similarity.

All vectors leaving this module are L2-normalized float64 arrays, whatever
the provider returned. Query and document texts go through identical (raw)
preprocessing.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np
import requests

from .errors import DimensionMismatch, ProviderUnavailable

DEFAULT_DIM = 768

NORM_TOLERANCE = 1e-6


class EmbeddingProvider(Protocol):
    model_id: str
    dim: int

    def embed(self, texts: list[str]) -> np.ndarray:
        """Return a (len(texts), dim) array, one row per input, in order."""
        ...


@dataclass
class EmbeddingProviderConfig:
    kind: str = "mock"  # "mock" | "http"
    model_id: str = "mock-768"
    dim: int = DEFAULT_DIM
    endpoint: str | None = None
    api_key_env: str = "LITRAG_EMBED_API_KEY"
    cache_dir: str | None = None

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        if self.kind == "http" and not self.endpoint:
            raise ValueError("http provider requires an endpoint")


def _hash_key(model_id: str, text: str) -> int:
    """64-bit key for the mock generator: blake2b over (model_id, 0x1f, text)."""
    h = hashlib.blake2b(f"{model_id}\x1f{text}".encode("utf-8"), digest_size=8)
    return int.from_bytes(h.digest(), "little")


class DeterministicMockProvider:
    """Offline provider with documented, stable vectors.

    For each text: seed a Philox counter-based generator with the 64-bit
    hash of (model_id, text), draw `dim` standard normals, L2-normalize.
    Equal texts always map to equal vectors; distinct texts collide with
    negligible probability.
    """

    def __init__(self, model_id: str = "mock-768", dim: int = DEFAULT_DIM):
        self.model_id = model_id
        self.dim = dim

    def embed(self, texts: list[str]) -> np.ndarray:
        out = np.empty((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            rng = np.random.Generator(np.random.Philox(key=_hash_key(self.model_id, text)))
            v = rng.standard_normal(self.dim)
            out[i] = v / np.linalg.norm(v)
        return out


class HttpEmbeddingProvider:
    """Client for an OpenAI-compatible embedding service.

    POST {model, input:[texts]} -> {data:[{index, embedding}]}. The API key
    is read from the configured environment variable at call time.
    """

    def __init__(self, config: EmbeddingProviderConfig, session: requests.Session | None = None,
                 timeout: float = 60.0):
        if not config.endpoint:
            raise ValueError("http provider requires an endpoint")
        self.model_id = config.model_id
        self.dim = config.dim
        self.endpoint = config.endpoint
        self.api_key_env = config.api_key_env
        self.timeout = timeout
        self.session = session or requests.Session()

    def embed(self, texts: list[str]) -> np.ndarray:
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        try:
            resp = self.session.post(
                self.endpoint,
                json={"model": self.model_id, "input": texts},
                headers=headers,
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise ProviderUnavailable(f"embedding service unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderUnavailable(
                f"embedding service returned {resp.status_code}: {resp.text[:200]}")
        try:
            data = resp.json()["data"]
            rows = sorted(data, key=lambda d: d["index"])
            matrix = np.asarray([row["embedding"] for row in rows], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderUnavailable(f"malformed embedding response: {exc}") from exc
        if matrix.shape[0] != len(texts):
            raise ProviderUnavailable(
                f"embedding service returned {matrix.shape[0]} rows for {len(texts)} inputs")
        return matrix


_SAFE = re.compile(r"[^A-Za-z0-9._-]+")


class EmbeddingCache:
    """Content-addressed disk cache, one append-only JSONL file per model.

    Entries are keyed by sha256(text); vectors are stored as raw float64
    bytes (base64) so cache hits are bit-identical to the original call.
    Single-writer, multi-reader: appends happen under a lock.
    """

    def __init__(self, cache_dir: str | Path, model_id: str):
        self.path = Path(cache_dir) / (_SAFE.sub("_", model_id) + ".jsonl")
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._mem: dict[str, np.ndarray] = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    rec = json.loads(line)
                    vec = np.frombuffer(base64.b64decode(rec["v"]), dtype=np.float64)
                    self._mem[rec["h"]] = vec

    @staticmethod
    def key(text: str) -> str:
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def get(self, text: str) -> np.ndarray | None:
        vec = self._mem.get(self.key(text))
        return None if vec is None else vec.copy()

    def put(self, text: str, vector: np.ndarray) -> None:
        h = self.key(text)
        with self._lock:
            if h in self._mem:
                return
            self._mem[h] = np.array(vector, dtype=np.float64)
            rec = {"h": h, "v": base64.b64encode(
                np.asarray(vector, dtype=np.float64).tobytes()).decode("ascii")}
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(rec) + "\n")


def make_provider(config: EmbeddingProviderConfig) -> EmbeddingProvider:
    if config.kind == "mock":
        return DeterministicMockProvider(config.model_id, config.dim)
    if config.kind == "http":
        return HttpEmbeddingProvider(config)
    raise ValueError(f"unknown embedding provider kind: {config.kind}")


def embed_batch(texts: list[str], provider: EmbeddingProvider,
                cache: EmbeddingCache | None = None) -> np.ndarray:
    """Embed texts in order, L2-normalizing locally regardless of provider.

    Raises DimensionMismatch when the provider returns vectors of the wrong
    length, ValueError on empty/blank inputs.
    """
    if not texts:
        raise ValueError("texts must be non-empty")
    for t in texts:
        if not t.strip():
            raise ValueError("every text must be non-blank")

    out = np.empty((len(texts), provider.dim), dtype=np.float64)
    missing_idx: list[int] = []
    missing_texts: list[str] = []
    for i, text in enumerate(texts):
        cached = cache.get(text) if cache is not None else None
        if cached is not None:
            if cached.shape[0] != provider.dim:
                raise DimensionMismatch(
                    f"cached vector has dim {cached.shape[0]}, expected {provider.dim}")
            out[i] = cached
        else:
            missing_idx.append(i)
            missing_texts.append(text)

    if missing_texts:
        raw = provider.embed(missing_texts)
        raw = np.atleast_2d(np.asarray(raw, dtype=np.float64))
        if raw.shape != (len(missing_texts), provider.dim):
            raise DimensionMismatch(
                f"provider returned shape {raw.shape}, expected "
                f"({len(missing_texts)}, {provider.dim})")
        norms = np.linalg.norm(raw, axis=1)
        if np.any(norms == 0.0):
            raise ProviderUnavailable("provider returned a zero vector")
        normalized = raw / norms[:, None]
        for row, i, text in zip(normalized, missing_idx, missing_texts):
            out[i] = row
            if cache is not None:
                cache.put(text, row)
    return out


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product of two unit vectors; symmetric by construction."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dim {a.shape} vs {b.shape}")
    return float(np.dot(a, b))


def is_unit(v: np.ndarray, tolerance: float = NORM_TOLERANCE) -> bool:
    return abs(float(np.linalg.norm(v)) - 1.0) <= tolerance
