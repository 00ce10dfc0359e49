"""Corpus harvesting: question condensation, article search, PDF retrieval,
GROBID extraction, TEI cleaning, and persistent storage."""

from .arxiv import ArticleMeta, ArxivClient, PdfHandle, fetch_pdf, parse_atom_feed
from .grobid import GrobidEndpoint, extract_tei
from .questions import (
    CONDENSE_PROMPT,
    CrispStage,
    ResearchQuestion,
    SearchQuery,
    condense_query,
    load_questions,
)
from .store import CorpusStore, clean_from_dict, clean_to_dict, meta_from_dict, meta_to_dict
from .tei import CleanDocument, parse_tei

__all__ = [
    "ArticleMeta", "ArxivClient", "PdfHandle", "fetch_pdf", "parse_atom_feed",
    "GrobidEndpoint", "extract_tei",
    "CONDENSE_PROMPT", "CrispStage", "ResearchQuestion", "SearchQuery",
    "condense_query", "load_questions",
    "CorpusStore", "clean_from_dict", "clean_to_dict", "meta_from_dict", "meta_to_dict",
    "CleanDocument", "parse_tei",
]
