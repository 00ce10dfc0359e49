"""Corpus persistence: one metadata record per line plus raw PDF, TEI, and
clean-document files keyed by article id, so every stage is resumable.

Layout: corpus/meta.jsonl, corpus/pdf/<id>.pdf (+ .sha256 sidecar),
corpus/tei/<id>.xml, corpus/clean/<id>.json. Writes are serialized.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from pathlib import Path

from .arxiv import ArticleMeta, PdfHandle
from .tei import CleanDocument

_SAFE = re.compile(r"[^A-Za-z0-9._-]+")


def _safe_id(article_id: str) -> str:
    return _SAFE.sub("_", article_id)


def meta_to_dict(meta: ArticleMeta) -> dict:
    return {
        "article_id": meta.article_id,
        "title": meta.title,
        "authors": list(meta.authors),
        "abstract": meta.abstract,
        "published": meta.published,
        "pdf_url": meta.pdf_url,
        "abstract_missing": meta.abstract_missing,
    }


def meta_from_dict(d: dict) -> ArticleMeta:
    return ArticleMeta(
        article_id=d["article_id"],
        title=d["title"],
        authors=tuple(d["authors"]),
        abstract=d["abstract"],
        published=d["published"],
        pdf_url=d.get("pdf_url"),
        abstract_missing=d.get("abstract_missing", False),
    )


def clean_to_dict(doc: CleanDocument) -> dict:
    return {
        "meta": meta_to_dict(doc.meta),
        "sections": [[heading, list(paragraphs)] for heading, paragraphs in doc.sections],
        "raw_word_count": doc.raw_word_count,
    }


def clean_from_dict(d: dict) -> CleanDocument:
    return CleanDocument(
        meta=meta_from_dict(d["meta"]),
        sections=tuple((heading, tuple(paragraphs)) for heading, paragraphs in d["sections"]),
        raw_word_count=d["raw_word_count"],
    )


class CorpusStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock = threading.Lock()
        for sub in ("pdf", "tei", "clean", "chunks"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)

    # --- metadata ---------------------------------------------------------

    @property
    def meta_path(self) -> Path:
        return self.root / "meta.jsonl"

    def save_metas(self, metas: list[ArticleMeta]) -> int:
        """Append metas not yet present (dedup by article_id, corpus-wide)."""
        with self._lock:
            existing = {m.article_id for m in self._load_metas_unlocked()}
            added = 0
            with open(self.meta_path, "a", encoding="utf-8") as fh:
                for meta in metas:
                    if meta.article_id in existing:
                        continue
                    fh.write(json.dumps(meta_to_dict(meta)) + "\n")
                    existing.add(meta.article_id)
                    added += 1
            return added

    def _load_metas_unlocked(self) -> list[ArticleMeta]:
        if not self.meta_path.exists():
            return []
        out = []
        with open(self.meta_path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    out.append(meta_from_dict(json.loads(line)))
        return out

    def load_metas(self) -> list[ArticleMeta]:
        with self._lock:
            return self._load_metas_unlocked()

    # --- PDFs ---------------------------------------------------------------

    def pdf_path(self, article_id: str) -> Path:
        return self.root / "pdf" / f"{_safe_id(article_id)}.pdf"

    def pdf_handle(self, article_id: str) -> PdfHandle | None:
        path = self.pdf_path(article_id)
        sidecar = path.with_suffix(".sha256")
        if not path.exists():
            return None
        if sidecar.exists():
            digest = sidecar.read_text().strip()
        else:
            digest = hashlib.sha256(path.read_bytes()).hexdigest()
        return PdfHandle(article_id=article_id, path=path, sha256=digest)

    def save_pdf(self, article_id: str, data: bytes) -> PdfHandle:
        path = self.pdf_path(article_id)
        digest = hashlib.sha256(data).hexdigest()
        with self._lock:
            path.write_bytes(data)
            path.with_suffix(".sha256").write_text(digest + "\n")
        return PdfHandle(article_id=article_id, path=path, sha256=digest)

    # --- TEI ------------------------------------------------------------------

    def tei_path(self, article_id: str) -> Path:
        return self.root / "tei" / f"{_safe_id(article_id)}.xml"

    def save_tei(self, article_id: str, tei: str) -> Path:
        path = self.tei_path(article_id)
        with self._lock:
            path.write_text(tei, encoding="utf-8")
        return path

    def load_tei(self, article_id: str) -> str:
        return self.tei_path(article_id).read_text(encoding="utf-8")

    # --- clean documents -------------------------------------------------------

    def clean_path(self, article_id: str) -> Path:
        return self.root / "clean" / f"{_safe_id(article_id)}.json"

    def save_clean(self, doc: CleanDocument) -> Path:
        path = self.clean_path(doc.meta.article_id)
        with self._lock:
            path.write_text(json.dumps(clean_to_dict(doc), ensure_ascii=False),
                            encoding="utf-8")
        return path

    def load_clean(self, article_id: str) -> CleanDocument:
        return clean_from_dict(json.loads(self.clean_path(article_id).read_text(encoding="utf-8")))

    def iter_clean(self) -> list[CleanDocument]:
        docs = []
        for path in sorted((self.root / "clean").glob("*.json")):
            docs.append(clean_from_dict(json.loads(path.read_text(encoding="utf-8"))))
        return docs

    # --- chunks -----------------------------------------------------------------

    def chunks_path(self, strategy: str) -> Path:
        return self.root / "chunks" / f"{strategy}.jsonl"
