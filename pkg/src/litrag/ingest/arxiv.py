"""arXiv-compatible article search (Atom feed) and PDF retrieval."""

from __future__ import annotations

import hashlib
import logging
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

import requests

from ..errors import ApiUnavailable, ChecksumMismatch, DownloadFailed, MalformedFeed
from ..textutil import collapse_ws
from .questions import SearchQuery

log = logging.getLogger(__name__)

ATOM_NS = "{http://www.w3.org/2005/Atom}"

DEFAULT_ENDPOINT = "http://export.arxiv.org/api/query"
DEFAULT_PAGE_SIZE = 100
DEFAULT_DELAY_SECONDS = 3.0


@dataclass(frozen=True)
class ArticleMeta:
    article_id: str
    title: str
    authors: tuple[str, ...]
    abstract: str
    published: str
    pdf_url: str | None
    abstract_missing: bool = False


@dataclass
class ArxivClient:
    """Serial, polite client: one page at a time, configurable delay between
    requests, a single retry on transient failure."""

    endpoint: str = DEFAULT_ENDPOINT
    page_size: int = DEFAULT_PAGE_SIZE
    delay_seconds: float = DEFAULT_DELAY_SECONDS
    timeout: float = 60.0
    session: requests.Session = field(default_factory=requests.Session)

    def _get(self, params: dict) -> str:
        last_exc: Exception | None = None
        for attempt in range(2):
            try:
                resp = self.session.get(self.endpoint, params=params, timeout=self.timeout)
                if resp.status_code == 200:
                    return resp.text
                last_exc = ApiUnavailable(f"search API returned {resp.status_code}")
            except requests.RequestException as exc:
                last_exc = exc
            if attempt == 0:
                time.sleep(self.delay_seconds)
        raise ApiUnavailable(f"search API unreachable: {last_exc}")

    def search_articles(self, query: SearchQuery, max_results: int = 100) -> list[ArticleMeta]:
        """Fetch up to max_results articles in API relevance order,
        deduplicated by article_id (first occurrence wins)."""
        if max_results < 1:
            raise ValueError("max_results must be >= 1")
        seen: set[str] = set()
        out: list[ArticleMeta] = []
        start = 0
        while len(out) < max_results:
            page = min(self.page_size, max_results - len(out))
            body = self._get({"search_query": query.text, "start": start,
                              "max_results": page})
            entries = parse_atom_feed(body)
            added = 0
            for meta in entries:
                if meta.article_id not in seen:
                    seen.add(meta.article_id)
                    out.append(meta)
                    added += 1
                    if len(out) >= max_results:
                        break
            if len(entries) < page or added == 0:  # exhausted or all duplicates
                break
            start += page
            if len(out) < max_results:
                time.sleep(self.delay_seconds)
        return out


def parse_atom_feed(body: str) -> list[ArticleMeta]:
    """Parse an Atom feed body into ArticleMeta entries, in feed order."""
    try:
        root = ET.fromstring(body)
    except ET.ParseError as exc:
        raise MalformedFeed(f"response is not well-formed XML: {exc}") from exc
    if root.tag != f"{ATOM_NS}feed":
        raise MalformedFeed(f"root element is {root.tag}, expected Atom feed")

    entries = []
    for entry in root.findall(f"{ATOM_NS}entry"):
        raw_id = _text(entry.find(f"{ATOM_NS}id"))
        article_id = raw_id.rsplit("/", 1)[-1] if raw_id else ""
        if not article_id:
            raise MalformedFeed("entry without id")
        abstract = collapse_ws(_text(entry.find(f"{ATOM_NS}summary")))
        pdf_url = None
        for link in entry.findall(f"{ATOM_NS}link"):
            if link.get("title") == "pdf" or link.get("type") == "application/pdf":
                pdf_url = link.get("href")
                break
        entries.append(ArticleMeta(
            article_id=article_id,
            title=collapse_ws(_text(entry.find(f"{ATOM_NS}title"))),
            authors=tuple(
                collapse_ws(_text(a.find(f"{ATOM_NS}name")))
                for a in entry.findall(f"{ATOM_NS}author")
            ),
            abstract=abstract,
            published=_text(entry.find(f"{ATOM_NS}published")),
            pdf_url=pdf_url,
            abstract_missing=not abstract,
        ))
    return entries


def _text(elem) -> str:
    return elem.text or "" if elem is not None else ""


@dataclass(frozen=True)
class PdfHandle:
    article_id: str
    path: Path
    sha256: str


def fetch_pdf(meta: ArticleMeta, store, session: requests.Session | None = None,
              timeout: float = 120.0) -> PdfHandle:
    """Download the article PDF into the corpus store.

    Idempotent: when the store already holds a PDF whose checksum matches
    its sidecar record, no network call is made. A stored file that fails
    its checksum raises ChecksumMismatch instead of being overwritten.
    """
    if not meta.pdf_url:
        raise ValueError(f"article {meta.article_id} has no pdf_url")
    existing = store.pdf_handle(meta.article_id)
    if existing is not None:
        actual = hashlib.sha256(existing.path.read_bytes()).hexdigest()
        if actual != existing.sha256:
            raise ChecksumMismatch(
                f"stored PDF for {meta.article_id} does not match its checksum")
        return existing

    session = session or requests.Session()
    try:
        resp = session.get(meta.pdf_url, timeout=timeout)
    except requests.RequestException as exc:
        raise DownloadFailed(meta.article_id, str(exc)) from exc
    if resp.status_code != 200:
        raise DownloadFailed(meta.article_id, f"HTTP {resp.status_code}")
    return store.save_pdf(meta.article_id, resp.content)
