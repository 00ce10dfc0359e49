"""TEI-XML parsing: reduce a GROBID document to clean, ordered section text.

Only the abstract and body paragraphs (with their division headings)
survive. Figures, tables, formulas, notes, and the entire back matter
(bibliography) are dropped; nested inline markup is flattened to plain
text with single-spaced whitespace.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass

from ..errors import EmptyBody, MalformedXml
from ..textutil import collapse_ws, word_count
from .arxiv import ArticleMeta

DROPPED_TAGS = frozenset({
    "figure", "table", "formula", "note", "graphic", "listBibl", "biblStruct",
})


@dataclass(frozen=True)
class CleanDocument:
    meta: ArticleMeta
    sections: tuple[tuple[str, tuple[str, ...]], ...]  # (heading, paragraphs)
    raw_word_count: int

    def body_text(self) -> str:
        return " ".join(p for _, paragraphs in self.sections for p in paragraphs)


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _flatten(elem: ET.Element) -> str:
    """Concatenate text content, skipping DROPPED_TAGS subtrees."""
    parts: list[str] = []
    if elem.text:
        parts.append(elem.text)
    for child in elem:
        if _local(child.tag) not in DROPPED_TAGS:
            parts.append(_flatten(child))
        if child.tail:
            parts.append(child.tail)
    return " ".join(parts)


def _paragraphs(container: ET.Element) -> list[str]:
    out = []
    for child in container:
        if _local(child.tag) == "p":
            text = collapse_ws(_flatten(child))
            if text:
                out.append(text)
    return out


def _iter_divs(elem: ET.Element):
    for child in elem:
        local = _local(child.tag)
        if local in DROPPED_TAGS:
            continue
        if local == "div":
            yield child
            yield from _iter_divs(child)


def parse_tei(tei: str, meta: ArticleMeta) -> CleanDocument:
    """Build a CleanDocument from a TEI body; deterministic for fixed bytes."""
    try:
        root = ET.fromstring(tei)
    except ET.ParseError as exc:
        raise MalformedXml(f"TEI for {meta.article_id} is not well-formed: {exc}") from exc

    sections: list[tuple[str, tuple[str, ...]]] = []

    for abstract in root.iter():
        if _local(abstract.tag) == "abstract":
            paragraphs = []
            for sub in abstract.iter():
                if _local(sub.tag) == "p":
                    text = collapse_ws(_flatten(sub))
                    if text:
                        paragraphs.append(text)
            if paragraphs:
                sections.append(("Abstract", tuple(paragraphs)))
            break

    body = None
    for elem in root.iter():
        if _local(elem.tag) == "body":
            body = elem
            break
    if body is not None:
        top_paragraphs = _paragraphs(body)
        if top_paragraphs:
            sections.append(("", tuple(top_paragraphs)))
        for div in _iter_divs(body):
            heading = ""
            for child in div:
                if _local(child.tag) == "head":
                    heading = collapse_ws(_flatten(child))
                    break
            paragraphs = _paragraphs(div)
            if paragraphs:
                sections.append((heading, tuple(paragraphs)))

    if not any(paragraphs for _, paragraphs in sections):
        raise EmptyBody(f"no paragraph text survives TEI filtering for {meta.article_id}")

    total = sum(word_count(p) for _, paragraphs in sections for p in paragraphs)
    return CleanDocument(meta=meta, sections=tuple(sections), raw_word_count=total)
