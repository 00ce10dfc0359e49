"""Judge-based quality metrics and the replication runner.

Three scores per answer:
  context relevance  = relevant context sentences / total context sentences
  faithfulness       = answer claims inferable from context / total claims
  answer relevance   = mean cosine between the original question's embedding
                       and embeddings of questions regenerated from the answer

Scores are pure functions of the persisted verdict plus embeddings, so
replaying stored verdicts reproduces them bit-exactly. Judge failures and
zero-claim answers become missing values, never zeros.
"""

from __future__ import annotations

import datetime as _dt
import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Protocol

import numpy as np

from .chunking import split_sentences
from .embedding import EmbeddingCache, EmbeddingProvider, embed_batch
from .errors import JudgeUnparseable, ZeroClaims
from .ingest.questions import ResearchQuestion
from .llm import LlmClient
from .pipeline import PipelineConfig, Retriever, generate_answer
from .textutil import parse_numbered_lines, parse_yes_no

log = logging.getLogger(__name__)

DEFAULT_GENERATED_QUESTIONS = 3

METRIC_KEYS = ("context_relevance", "faithfulness", "answer_relevance")

TABLE_COLUMNS = ("Context Relevancy", "Faithfulness", "Answer Relevance",
                 "Average Word Count")


def _prompt_asset(name: str) -> str:
    return resources.files("litrag.assets.prompts").joinpath(name).read_text(encoding="utf-8")


@dataclass
class JudgeVerdict:
    relevant_sentence_flags: list[bool] = field(default_factory=list)
    claims: list[str] = field(default_factory=list)
    claim_supported_flags: list[bool] = field(default_factory=list)
    generated_questions: list[str] = field(default_factory=list)
    raw_responses: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "relevant_sentence_flags": self.relevant_sentence_flags,
            "claims": self.claims,
            "claim_supported_flags": self.claim_supported_flags,
            "generated_questions": self.generated_questions,
            "raw_responses": self.raw_responses,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JudgeVerdict":
        return cls(
            relevant_sentence_flags=list(d.get("relevant_sentence_flags", [])),
            claims=list(d.get("claims", [])),
            claim_supported_flags=list(d.get("claim_supported_flags", [])),
            generated_questions=list(d.get("generated_questions", [])),
            raw_responses=dict(d.get("raw_responses", {})),
        )


class Judge(Protocol):
    def relevant_sentence_flags(self, question: str, sentences: list[str]) -> list[bool]: ...

    def decompose_claims(self, answer: str) -> list[str]: ...

    def claim_supported_flags(self, claims: list[str], context: str) -> list[bool]: ...

    def generate_questions(self, answer: str, n: int) -> list[str]: ...


class LlmJudge:
    """Judge backed by an LLM through versioned prompt assets.

    Responses must follow the numbered-list contract; a response that fails
    to parse is retried once, then raises JudgeUnparseable.
    """

    def __init__(self, llm: LlmClient):
        self.llm = llm
        self._rel = _prompt_asset("judge_relevant_sentences_v1.txt")
        self._claims = _prompt_asset("judge_claims_v1.txt")
        self._verify = _prompt_asset("judge_claim_verification_v1.txt")
        self._genq = _prompt_asset("judge_generate_questions_v1.txt")
        self.last_responses: dict[str, str] = {}

    def _ask_flags(self, prompt: str, expected: int, kind: str) -> list[bool]:
        for attempt in range(2):
            raw = self.llm.complete(prompt)
            self.last_responses[kind] = raw
            items = parse_numbered_lines(raw)
            flags = [parse_yes_no(item) for _, item in items]
            if len(flags) == expected and all(f is not None for f in flags):
                return [bool(f) for f in flags]
            log.warning("judge %s response unparseable (attempt %d)", kind, attempt + 1)
        raise JudgeUnparseable(f"judge {kind} response did not match contract")

    def relevant_sentence_flags(self, question: str, sentences: list[str]) -> list[bool]:
        numbered = "\n".join(f"{i + 1}. {s}" for i, s in enumerate(sentences))
        prompt = self._rel.format(question=question, sentences=numbered)
        return self._ask_flags(prompt, len(sentences), "relevant_sentences")

    def decompose_claims(self, answer: str) -> list[str]:
        for attempt in range(2):
            raw = self.llm.complete(self._claims.format(answer=answer))
            self.last_responses["claims"] = raw
            if raw.strip().upper() == "NONE":
                return []
            items = parse_numbered_lines(raw)
            if items:
                return [text for _, text in items]
            log.warning("judge claims response unparseable (attempt %d)", attempt + 1)
        raise JudgeUnparseable("judge claim decomposition did not match contract")

    def claim_supported_flags(self, claims: list[str], context: str) -> list[bool]:
        numbered = "\n".join(f"{i + 1}. {c}" for i, c in enumerate(claims))
        prompt = self._verify.format(context=context, claims=numbered)
        return self._ask_flags(prompt, len(claims), "claim_verification")

    def generate_questions(self, answer: str, n: int) -> list[str]:
        for attempt in range(2):
            raw = self.llm.complete(self._genq.format(answer=answer, n=n))
            self.last_responses["generated_questions"] = raw
            items = parse_numbered_lines(raw)
            if items:
                return [text for _, text in items][:n]
            log.warning("judge question generation unparseable (attempt %d)", attempt + 1)
        raise JudgeUnparseable("judge question generation did not match contract")


_STOPWORDS = frozenset(
    "a an the of in on for to and or with is are was were be been this that "
    "i my we our you your as at by from it its".split())


def _content_words(text: str) -> set[str]:
    return {w.strip(".,;:!?()[]\"'").lower() for w in text.split()} - _STOPWORDS - {""}


class HeuristicJudge:
    """Deterministic offline judge: word-overlap rules instead of an LLM.

    Lets the whole harness (desk runs, acceptance, demos) execute with no
    external service while still producing varied, content-dependent scores.
    """

    def relevant_sentence_flags(self, question: str, sentences: list[str]) -> list[bool]:
        q_words = _content_words(question)
        return [len(_content_words(s) & q_words) >= 2 for s in sentences]

    def decompose_claims(self, answer: str) -> list[str]:
        return [s.text for s in split_sentences(answer)]

    def claim_supported_flags(self, claims: list[str], context: str) -> list[bool]:
        ctx_words = _content_words(context)
        out = []
        for claim in claims:
            words = _content_words(claim)
            overlap = len(words & ctx_words) / len(words) if words else 0.0
            out.append(overlap >= 0.6)
        return out

    def generate_questions(self, answer: str, n: int) -> list[str]:
        sentences = split_sentences(answer)
        base = sentences[0].text if sentences else answer.strip() or "the topic"
        return [f"What does the following describe: {base}"] + [
            f"Which approach is recommended here ({i})? {base}" for i in range(1, n)
        ]


class ScriptedJudge:
    """Test double replaying a fixed verdict."""

    def __init__(self, verdict: JudgeVerdict):
        self.verdict = verdict

    def relevant_sentence_flags(self, question, sentences):
        return list(self.verdict.relevant_sentence_flags)

    def decompose_claims(self, answer):
        return list(self.verdict.claims)

    def claim_supported_flags(self, claims, context):
        return list(self.verdict.claim_supported_flags)

    def generate_questions(self, answer, n):
        return list(self.verdict.generated_questions)[:n]


# --- metric computation ------------------------------------------------------


def context_relevance_from_verdict(verdict: JudgeVerdict) -> float:
    flags = verdict.relevant_sentence_flags
    if not flags:
        raise ValueError("verdict has no sentence flags")
    return sum(flags) / len(flags)


def faithfulness_from_verdict(verdict: JudgeVerdict) -> float:
    if not verdict.claims:
        raise ZeroClaims("no claims in answer")
    flags = verdict.claim_supported_flags
    if len(flags) != len(verdict.claims):
        raise ValueError("claim flags misaligned with claims")
    return sum(flags) / len(flags)


def answer_relevance_from_questions(original_question: str, generated: list[str],
                                    provider: EmbeddingProvider,
                                    cache: EmbeddingCache | None = None) -> float:
    if not generated:
        raise ValueError("no generated questions")
    vectors = embed_batch([original_question] + list(generated), provider, cache)
    original, rest = vectors[0], vectors[1:]
    return float(np.mean(rest @ original))


def context_relevance(question: str, context_text: str, judge: Judge,
                      verdict: JudgeVerdict | None = None) -> float:
    """Fraction of context sentences the judge flags as needed.

    The sentence list is exactly the sentence-splitter output of the joined
    context, so scoring never drifts from chunking.
    """
    sentences = [s.text for s in split_sentences(context_text)]
    if not sentences:
        raise ValueError("context has no sentences")
    flags = judge.relevant_sentence_flags(question, sentences)
    if len(flags) != len(sentences):
        raise JudgeUnparseable("sentence flags misaligned with sentences")
    if verdict is not None:
        verdict.relevant_sentence_flags = list(flags)
    return sum(flags) / len(flags)


def faithfulness(question: str, answer: str, context_text: str, judge: Judge,
                 verdict: JudgeVerdict | None = None) -> float:
    """Fraction of answer claims inferable from the context."""
    if not answer.strip():
        raise ValueError("answer must be non-empty")
    claims = judge.decompose_claims(answer)
    if not claims:
        raise ZeroClaims("judge found no claims in answer")
    flags = judge.claim_supported_flags(claims, context_text)
    if len(flags) != len(claims):
        raise JudgeUnparseable("claim flags misaligned with claims")
    if verdict is not None:
        verdict.claims = list(claims)
        verdict.claim_supported_flags = list(flags)
    return sum(flags) / len(flags)


def answer_relevance(question: str, answer: str, judge: Judge,
                     provider: EmbeddingProvider,
                     n_questions: int = DEFAULT_GENERATED_QUESTIONS,
                     cache: EmbeddingCache | None = None,
                     verdict: JudgeVerdict | None = None) -> float:
    """Mean cosine between the original question and regenerated questions."""
    if n_questions < 1:
        raise ValueError("n_questions must be >= 1")
    generated = judge.generate_questions(answer, n_questions)
    if not generated:
        raise JudgeUnparseable("judge generated no questions")
    if verdict is not None:
        verdict.generated_questions = list(generated)
    return answer_relevance_from_questions(question, generated, provider, cache)


# --- records and tables ------------------------------------------------------


@dataclass
class MetricScores:
    context_relevance: float | None
    faithfulness: float | None
    answer_relevance: float | None
    context_word_count: int

    def to_dict(self) -> dict:
        return {
            "context_relevance": self.context_relevance,
            "faithfulness": self.faithfulness,
            "answer_relevance": self.answer_relevance,
            "context_word_count": self.context_word_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricScores":
        return cls(
            context_relevance=d.get("context_relevance"),
            faithfulness=d.get("faithfulness"),
            answer_relevance=d.get("answer_relevance"),
            context_word_count=d["context_word_count"],
        )


@dataclass
class EvalRecord:
    question_id: str
    replication: int  # 1..R
    config_label: str
    answer_text: str
    scores: MetricScores
    n_questions: int
    timestamp: str

    def key(self) -> tuple[str, int, str]:
        return (self.question_id, self.replication, self.config_label)

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "replication": self.replication,
            "config_label": self.config_label,
            "answer_text": self.answer_text,
            "scores": self.scores.to_dict(),
            "n_questions": self.n_questions,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalRecord":
        return cls(
            question_id=d["question_id"],
            replication=d["replication"],
            config_label=d["config_label"],
            answer_text=d["answer_text"],
            scores=MetricScores.from_dict(d["scores"]),
            n_questions=d.get("n_questions", DEFAULT_GENERATED_QUESTIONS),
            timestamp=d.get("timestamp", ""),
        )


@dataclass
class ConfigSamples:
    label: str
    samples: dict[str, list[float]] = field(
        default_factory=lambda: {k: [] for k in METRIC_KEYS})
    word_counts: list[int] = field(default_factory=list)
    missing: dict[str, int] = field(default_factory=lambda: {k: 0 for k in METRIC_KEYS})
    failures: int = 0

    def add(self, record: EvalRecord) -> None:
        scores = record.scores
        for key in METRIC_KEYS:
            value = getattr(scores, key)
            if value is None:
                self.missing[key] += 1
            else:
                self.samples[key].append(value)
        self.word_counts.append(scores.context_word_count)

    def mean(self, key: str) -> float | None:
        values = self.samples[key]
        return float(np.mean(values)) if values else None

    def average_word_count(self) -> float | None:
        return float(np.mean(self.word_counts)) if self.word_counts else None


@dataclass
class ExperimentTable:
    configs: dict[str, ConfigSamples] = field(default_factory=dict)

    def config(self, label: str) -> ConfigSamples:
        if label not in self.configs:
            self.configs[label] = ConfigSamples(label)
        return self.configs[label]

    def merge(self, other: "ExperimentTable") -> "ExperimentTable":
        for label, samples in other.configs.items():
            if label in self.configs:
                raise ValueError(f"duplicate config label {label}")
            self.configs[label] = samples
        return self

    def to_csv(self) -> str:
        lines = ["Configuration," + ",".join(TABLE_COLUMNS)]
        for label in sorted(self.configs):
            cs = self.configs[label]
            cells = [label]
            for key in METRIC_KEYS:
                mean = cs.mean(key)
                cells.append("" if mean is None else f"{mean:.3f}")
            awc = cs.average_word_count()
            cells.append("" if awc is None else f"{awc:.2f}")
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def average_word_count(records: list[EvalRecord]) -> float:
    """Mean retrieved-context word count over records."""
    if not records:
        raise ValueError("records must be non-empty")
    return float(np.mean([r.scores.context_word_count for r in records]))


def score_answer(question_text: str, answer_text: str, context_text: str,
                 context_word_count: int, judge: Judge, provider: EmbeddingProvider,
                 n_questions: int = DEFAULT_GENERATED_QUESTIONS,
                 cache: EmbeddingCache | None = None) -> tuple[MetricScores, JudgeVerdict]:
    """Score one answer on all three metrics; judge failures become missing."""
    verdict = JudgeVerdict()
    cr: float | None
    try:
        cr = context_relevance(question_text, context_text, judge, verdict)
    except (ValueError, JudgeUnparseable) as exc:
        log.warning("context relevance missing: %s", exc)
        cr = None
    try:
        fa = faithfulness(question_text, answer_text, context_text, judge, verdict)
    except (ZeroClaims, ValueError, JudgeUnparseable) as exc:
        log.warning("faithfulness missing: %s", exc)
        fa = None
    try:
        ar = answer_relevance(question_text, answer_text, judge, provider,
                              n_questions, cache, verdict)
    except (ValueError, JudgeUnparseable) as exc:
        log.warning("answer relevance missing: %s", exc)
        ar = None
    if isinstance(judge, LlmJudge):
        verdict.raw_responses = dict(judge.last_responses)
    scores = MetricScores(context_relevance=cr, faithfulness=fa, answer_relevance=ar,
                          context_word_count=context_word_count)
    return scores, verdict


class EvalStore:
    """Per-config record/verdict persistence under eval/<config>/."""

    def __init__(self, root: str | Path, config_label: str):
        self.dir = Path(root) / config_label
        self.dir.mkdir(parents=True, exist_ok=True)
        self.records_path = self.dir / "records.jsonl"
        self.verdicts_path = self.dir / "verdicts.jsonl"
        self._lock = threading.Lock()

    def append(self, record: EvalRecord, verdict: JudgeVerdict) -> None:
        with self._lock:
            with open(self.records_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")
            with open(self.verdicts_path, "a", encoding="utf-8") as fh:
                entry = {"question_id": record.question_id,
                         "replication": record.replication,
                         "config_label": record.config_label,
                         "verdict": verdict.to_dict()}
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")

    def load_records(self) -> list[EvalRecord]:
        if not self.records_path.exists():
            return []
        out = []
        with open(self.records_path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    out.append(EvalRecord.from_dict(json.loads(line)))
        return out

    def reset(self) -> None:
        for path in (self.records_path, self.verdicts_path):
            if path.exists():
                path.unlink()


def run_experiment(questions: list[ResearchQuestion], config: PipelineConfig,
                   config_label: str, replications: int, retriever: Retriever,
                   llm: LlmClient, judge: Judge,
                   n_questions: int = DEFAULT_GENERATED_QUESTIONS,
                   store: EvalStore | None = None,
                   workers: int = 1,
                   clock=None) -> ExperimentTable:
    """Run questions x replications through the pipeline and score each run.

    Per-record judge/LLM failures are logged and excluded (missing values
    with reported counts); only a missing corpus/index aborts the run.
    Records are persisted in deterministic (question, replication) order.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    clock = clock or (lambda: _dt.datetime.now(_dt.timezone.utc).isoformat())
    table = ExperimentTable()
    samples = table.config(config_label)
    if store is not None:
        store.reset()

    jobs = [(q, rep) for q in questions for rep in range(1, replications + 1)]

    def run_one(job):
        question, rep = job
        answer = generate_answer(question.text, retriever, config, llm)
        scores, verdict = score_answer(
            question.text, answer.text, answer.context.joined_text,
            answer.context.total_word_count, judge, retriever.provider,
            n_questions, retriever.cache)
        record = EvalRecord(
            question_id=question.id, replication=rep, config_label=config_label,
            answer_text=answer.text, scores=scores, n_questions=n_questions,
            timestamp=clock())
        return record, verdict

    results: list[tuple[EvalRecord, JudgeVerdict] | Exception] = []
    if workers <= 1:
        for job in jobs:
            try:
                results.append(run_one(job))
            except Exception as exc:  # per-record failure
                results.append(exc)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_one, job) for job in jobs]
            for future in futures:
                try:
                    results.append(future.result())
                except Exception as exc:
                    results.append(exc)

    seen: set[tuple[str, int, str]] = set()
    for job, result in zip(jobs, results):
        if isinstance(result, Exception):
            log.error("replication failed for %s rep %d: %s", job[0].id, job[1], result)
            samples.failures += 1
            continue
        record, verdict = result
        if record.key() in seen:
            raise ValueError(f"duplicate eval record {record.key()}")
        seen.add(record.key())
        samples.add(record)
        if store is not None:
            store.append(record, verdict)
    if samples.failures:
        log.warning("%d/%d replications failed for config %s",
                    samples.failures, len(jobs), config_label)
    return table
