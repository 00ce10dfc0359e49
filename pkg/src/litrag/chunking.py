"""Sentence splitting and the three segmentation strategies.

Semantic chunking places a boundary after sentence i whenever the embedding
distance to sentence i+1 exceeds the per-document percentile threshold, then
repairs degenerate chunk sizes (merge-small first, split-large second).
The recursive strategy is the fixed-size baseline with word overlap; the
semantic node splitter applies semantic chunking per document section.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .embedding import EmbeddingProvider, EmbeddingCache, embed_batch
from .textutil import collapse_ws, word_count

log = logging.getLogger(__name__)

# Tokens that end with '.' but do not terminate a sentence.
ABBREVIATIONS = frozenset({
    "fig.", "figs.", "eq.", "eqs.", "sec.", "secs.", "tab.", "no.", "nos.",
    "e.g.", "i.e.", "cf.", "al.", "et al.", "vs.", "etc.", "dr.", "prof.",
    "mr.", "mrs.", "ms.", "jr.", "sr.", "st.", "vol.", "pp.", "p.", "ch.",
    "approx.", "dept.", "univ.", "resp.",
})

# terminal punctuation, whitespace, then an (optionally bulleted/quoted)
# uppercase or digit sentence opener
_TERMINAL = re.compile(r"([.?!])(\s+)(?=(?:[•\"'(\[]\s*)*[A-Z0-9])")


class ChunkStrategy(str, Enum):
    SEMANTIC = "semantic"
    RECURSIVE = "recursive"
    SEMANTIC_NODE = "semantic-node"


@dataclass
class Sentence:
    text: str
    index: int
    word_count: int


@dataclass
class Chunk:
    chunk_id: str
    article_id: str
    text: str
    start: int  # sentence span [start, end)
    end: int
    word_count: int
    strategy: ChunkStrategy
    undersized: bool = False


@dataclass
class ChunkingParams:
    threshold_percentile: float = 95.0
    min_chunk_words: int = 50
    max_chunk_words: int = 300
    recursive_target_words: int = 180
    recursive_overlap_words: int = 30

    def __post_init__(self):
        if not 0.0 < self.threshold_percentile < 100.0:
            raise ValueError("threshold_percentile must be in (0, 100)")
        if self.min_chunk_words >= self.max_chunk_words:
            raise ValueError("min_chunk_words must be < max_chunk_words")
        if self.recursive_overlap_words >= self.recursive_target_words:
            raise ValueError("overlap must be < target")


def split_sentences(text: str) -> list[Sentence]:
    """Deterministic rule-based sentence split.

    Splits after '.', '?' or '!' followed by whitespace and an uppercase
    letter or digit, unless the token ending at the period is a known
    abbreviation. Empty input yields an empty list.
    """
    text = text.strip()
    if not text:
        return []
    pieces: list[str] = []
    last = 0
    for m in _TERMINAL.finditer(text):
        if m.group(1) == ".":
            prefix = text[last:m.end(1)]
            token = prefix.rsplit(None, 1)[-1].lower() if prefix.split() else ""
            if token.lstrip("([{\"'") in ABBREVIATIONS:
                continue
        pieces.append(text[last:m.end(1)])
        last = m.end()
    pieces.append(text[last:])

    sentences: list[Sentence] = []
    for piece in pieces:
        cleaned = collapse_ws(piece)
        if cleaned:
            sentences.append(Sentence(cleaned, len(sentences), word_count(cleaned)))
    return sentences


def adjacent_distances(sentences: list[Sentence], provider: EmbeddingProvider,
                       cache: EmbeddingCache | None = None) -> list[float]:
    """Cosine distances between consecutive sentence embeddings (length n-1)."""
    if len(sentences) < 2:
        raise ValueError("adjacent_distances requires at least 2 sentences")
    vectors = embed_batch([s.text for s in sentences], provider, cache)
    sims = np.sum(vectors[:-1] * vectors[1:], axis=1)
    return [float(1.0 - s) for s in sims]


def _make_chunk(sentences: list[Sentence], start: int, end: int, article_id: str,
                strategy: ChunkStrategy, seq: int) -> Chunk:
    text = " ".join(s.text for s in sentences[start:end])
    return Chunk(
        chunk_id=f"{article_id}:{strategy.value}:{seq}",
        article_id=article_id,
        text=text,
        start=start,
        end=end,
        word_count=word_count(text),
        strategy=strategy,
    )


def _span_words(sentences: list[Sentence], start: int, end: int) -> int:
    return sum(s.word_count for s in sentences[start:end])


def _merge_small(bounds: list[tuple[int, int]], distances: list[float],
                 sentences: list[Sentence], min_words: int) -> list[tuple[int, int]]:
    """Merge chunks below min_words into the neighbor across the smaller
    boundary distance; ties go to the previous chunk."""
    bounds = list(bounds)
    while len(bounds) > 1:
        target = None
        for i, (s, e) in enumerate(bounds):
            if _span_words(sentences, s, e) < min_words:
                target = i
                break
        if target is None:
            break
        s, e = bounds[target]
        prev_dist = distances[s - 1] if target > 0 else None
        next_dist = distances[e - 1] if target < len(bounds) - 1 else None
        if next_dist is None or (prev_dist is not None and prev_dist <= next_dist):
            ps, _ = bounds[target - 1]
            bounds[target - 1:target + 1] = [(ps, e)]
        else:
            _, ne = bounds[target + 1]
            bounds[target:target + 2] = [(s, ne)]
    return bounds


def _split_large(bounds: list[tuple[int, int]], distances: list[float],
                 sentences: list[Sentence], max_words: int) -> list[tuple[int, int]]:
    """Split chunks above max_words at their largest internal distance."""
    out: list[tuple[int, int]] = []
    stack = list(reversed(bounds))
    while stack:
        s, e = stack.pop()
        if _span_words(sentences, s, e) <= max_words or e - s < 2:
            out.append((s, e))
            continue
        internal = distances[s:e - 1]
        cut = s + 1 + int(np.argmax(internal))
        stack.append((cut, e))
        stack.append((s, cut))
    return out


def semantic_chunk(sentences: list[Sentence], provider: EmbeddingProvider,
                   params: ChunkingParams, article_id: str = "doc",
                   cache: EmbeddingCache | None = None,
                   strategy: ChunkStrategy = ChunkStrategy.SEMANTIC,
                   seq_offset: int = 0, span_offset: int = 0) -> list[Chunk]:
    """Segment sentences at low-similarity boundaries; spans partition the input.

    Boundary after sentence i iff distance[i] > P-th percentile of this
    document's adjacent distances. A repair pass then merges chunks below
    min_chunk_words and splits chunks above max_chunk_words.
    """
    if not sentences:
        raise ValueError("sentences must be non-empty")
    n = len(sentences)
    if n == 1:
        bounds = [(0, 1)]
        distances: list[float] = []
    else:
        distances = adjacent_distances(sentences, provider, cache)
        threshold = float(np.percentile(np.asarray(distances), params.threshold_percentile))
        cuts = [i + 1 for i, d in enumerate(distances) if d > threshold]
        edges = [0] + cuts + [n]
        bounds = list(zip(edges[:-1], edges[1:]))
        bounds = _merge_small(bounds, distances, sentences, params.min_chunk_words)
        bounds = _split_large(bounds, distances, sentences, params.max_chunk_words)

    chunks = []
    for seq, (s, e) in enumerate(bounds, start=seq_offset):
        chunk = _make_chunk(sentences, s, e, article_id, strategy, seq)
        chunk.start += span_offset
        chunk.end += span_offset
        chunks.append(chunk)

    if len(chunks) == 1 and chunks[0].word_count < params.min_chunk_words:
        chunks[0].undersized = True
        log.warning("document %s below min_chunk_words (%d words); kept as one chunk",
                    article_id, chunks[0].word_count)
    return chunks


def recursive_chunk(text: str, params: ChunkingParams,
                    article_id: str = "doc") -> list[Chunk]:
    """Fixed-size baseline: greedy sentence packing up to the target word
    budget, carrying up to recursive_overlap_words of trailing sentences
    into the next chunk. Overlap is permitted, so spans may overlap."""
    sentences = split_sentences(text)
    if not sentences:
        return []

    chunks: list[Chunk] = []
    start = 0
    seq = 0
    n = len(sentences)
    while start < n:
        words = 0
        end = start
        while end < n and words + sentences[end].word_count <= params.recursive_target_words:
            words += sentences[end].word_count
            end += 1
        if end == start:  # single sentence over budget: emit alone
            end = start + 1
        chunks.append(_make_chunk(sentences, start, end, article_id,
                                  ChunkStrategy.RECURSIVE, seq))
        seq += 1
        if end >= n:
            break
        # carry trailing sentences totalling <= overlap words
        carry = end
        carried = 0
        while carry > start and carried + sentences[carry - 1].word_count <= params.recursive_overlap_words:
            carried += sentences[carry - 1].word_count
            carry -= 1
        start = carry if carry < end else end
    return chunks


def semantic_node_split(doc, provider: EmbeddingProvider, params: ChunkingParams,
                        cache: EmbeddingCache | None = None) -> list[Chunk]:
    """Semantic chunking applied per section; no chunk crosses a section
    boundary. Used to build fine-tune nodes. `doc` is a CleanDocument."""
    chunks: list[Chunk] = []
    span_offset = 0
    article_id = doc.meta.article_id
    for heading, paragraphs in doc.sections:
        section_text = " ".join(paragraphs).strip()
        if not section_text:
            continue
        sentences = split_sentences(section_text)
        if not sentences:
            continue
        chunks.extend(semantic_chunk(
            sentences, provider, params, article_id=article_id, cache=cache,
            strategy=ChunkStrategy.SEMANTIC_NODE,
            seq_offset=len(chunks), span_offset=span_offset))
        span_offset += len(sentences)
    return chunks


def chunk_to_dict(chunk: Chunk) -> dict:
    return {
        "chunk_id": chunk.chunk_id,
        "article_id": chunk.article_id,
        "text": chunk.text,
        "start": chunk.start,
        "end": chunk.end,
        "word_count": chunk.word_count,
        "strategy": chunk.strategy.value,
        "undersized": chunk.undersized,
    }


def chunk_from_dict(d: dict) -> Chunk:
    return Chunk(
        chunk_id=d["chunk_id"],
        article_id=d["article_id"],
        text=d["text"],
        start=d["start"],
        end=d["end"],
        word_count=d["word_count"],
        strategy=ChunkStrategy(d["strategy"]),
        undersized=d.get("undersized", False),
    )
