"""Research questions and their condensation into short search queries."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from ..errors import EmptyQuestion
from ..llm import LlmClient
from ..textutil import collapse_ws, word_count

log = logging.getLogger(__name__)

MAX_QUERY_WORDS = 10

CONDENSE_PROMPT = (
    "Transform the following detailed inquiry into a concise and focused "
    "research query suitable for academic search databases. The summary "
    "should highlight the main topic, applicable domain, and specific "
    "requirements or goals in a maximum of 10 words."
)


class CrispStage(str, Enum):
    DATA_PREPARATION = "DataPreparation"
    MODELING = "Modeling"
    EVALUATION = "Evaluation"


@dataclass(frozen=True)
class ResearchQuestion:
    id: str
    text: str
    crisp_stage: CrispStage
    subdomain: str

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("question text must be non-empty")


@dataclass(frozen=True)
class SearchQuery:
    text: str
    word_count: int

    def __post_init__(self):
        if self.word_count != word_count(self.text):
            raise ValueError("word_count must equal the token count of text")
        if self.word_count > MAX_QUERY_WORDS:
            raise ValueError(f"query exceeds {MAX_QUERY_WORDS} words")


def load_questions(path: str | Path) -> list[ResearchQuestion]:
    """Load the question fixture (JSON Lines: id, text, crisp_stage, subdomain)."""
    questions = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            questions.append(ResearchQuestion(
                id=rec["id"],
                text=rec["text"],
                crisp_stage=CrispStage(rec["crisp_stage"]),
                subdomain=rec["subdomain"],
            ))
    return questions


def condense_query(question: ResearchQuestion, llm: LlmClient) -> SearchQuery:
    """Condense a question to a <=10-word search query via the LLM.

    The word bound is enforced post-hoc: over-length output is truncated to
    its first 10 tokens (with a warning) rather than retried, keeping runs
    deterministic.
    """
    if not question.text.strip():
        raise EmptyQuestion(f"question {question.id} has empty text")
    raw = llm.complete(f"{CONDENSE_PROMPT}\n\nInquiry: {question.text}")
    first = next((ln for ln in raw.splitlines() if ln.strip()), "")
    line = collapse_ws(first)
    tokens = line.split()
    if len(tokens) > MAX_QUERY_WORDS:
        log.warning("condensed query for %s had %d words; truncated to %d",
                    question.id, len(tokens), MAX_QUERY_WORDS)
        tokens = tokens[:MAX_QUERY_WORDS]
    text = " ".join(tokens)
    return SearchQuery(text=text, word_count=len(tokens))
