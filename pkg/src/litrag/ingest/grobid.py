"""GROBID HTTP client: PDF in, TEI-XML out, verbatim."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import requests

from ..errors import GrobidRejected, GrobidUnavailable
from .arxiv import PdfHandle

log = logging.getLogger(__name__)

FULLTEXT_PATH = "/api/processFulltextDocument"


@dataclass
class GrobidEndpoint:
    base_url: str = "http://localhost:8070"
    timeout: float = 180.0


def extract_tei(pdf: PdfHandle, grobid: GrobidEndpoint,
                session: requests.Session | None = None) -> str:
    """POST the PDF to GROBID's fulltext endpoint and return the TEI body."""
    session = session or requests.Session()
    url = grobid.base_url.rstrip("/") + FULLTEXT_PATH
    try:
        with open(pdf.path, "rb") as fh:
            resp = session.post(
                url,
                files={"input": (pdf.path.name, fh, "application/pdf")},
                timeout=grobid.timeout,
            )
    except requests.RequestException as exc:
        raise GrobidUnavailable(f"GROBID unreachable at {url}: {exc}") from exc
    if resp.status_code != 200:
        log.error("GROBID rejected %s: status %d, body %r",
                  pdf.article_id, resp.status_code, resp.text[:500])
        raise GrobidRejected(resp.status_code, resp.text)
    return resp.text
