import math
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from litrag.chunking import Sentence
from litrag.embedding import DeterministicMockProvider
from litrag.ingest.arxiv import ArticleMeta
from litrag.ingest.tei import CleanDocument


@pytest.fixture
def mock_provider():
    return DeterministicMockProvider("mock-test", 32)


class VectorScriptedProvider:
    """Provider returning pre-assigned vectors per text (unit 2D by default)."""

    def __init__(self, mapping: dict, dim: int = 2, model_id: str = "vec-scripted"):
        self.mapping = {k: np.asarray(v, dtype=np.float64) for k, v in mapping.items()}
        self.dim = dim
        self.model_id = model_id

    def embed(self, texts):
        return np.vstack([self.mapping[t] for t in texts])


@pytest.fixture
def vector_provider_factory():
    return VectorScriptedProvider


def sentences_from(texts):
    return [Sentence(t, i, len(t.split())) for i, t in enumerate(texts)]


def angles_provider(texts, cosines):
    """Provider whose consecutive-sentence cosines equal `cosines` exactly."""
    assert len(cosines) == len(texts) - 1
    angles = [0.0]
    for c in cosines:
        angles.append(angles[-1] + math.acos(c))
    mapping = {t: (math.cos(a), math.sin(a)) for t, a in zip(texts, angles)}
    return VectorScriptedProvider(mapping)


# --- synthetic corpus ---------------------------------------------------------

TOPIC_WORDS = {
    "regression": ["regression", "linear", "predictor", "residual", "gradient",
                   "boosting", "spline", "kernel"],
    "clustering": ["clustering", "centroid", "density", "partition", "silhouette",
                   "hierarchy", "neighbor", "segment"],
    "forecasting": ["forecasting", "seasonal", "trend", "horizon", "autoregressive",
                    "volatility", "smoothing", "lag"],
    "vision": ["image", "convolution", "segmentation", "detection", "pixel",
               "resolution", "feature", "attention"],
    "language": ["language", "token", "transformer", "embedding", "corpus",
                 "sentiment", "parsing", "attention"],
}

FILLER = ["methods", "models", "datasets", "analysis", "results", "training",
          "evaluation", "approach", "performance", "studies"]


def make_document(doc_index: int, topic: str, n_sections: int = 2,
                  sentences_per_section: int = 8) -> CleanDocument:
    rng = np.random.default_rng(1000 + doc_index)
    words = TOPIC_WORDS[topic]
    article_id = f"art{doc_index:03d}"
    abstract = (f"This article studies {topic} {words[0]} and {words[1]} "
                f"with improved {words[2]} analysis.")
    sections = []
    for s in range(n_sections):
        sentences = []
        for i in range(sentences_per_section):
            chosen = list(rng.choice(words, size=3, replace=False))
            extra = list(rng.choice(FILLER, size=3, replace=False))
            sentences.append(
                f"The {chosen[0]} {extra[0]} uses {chosen[1]} {extra[1]} "
                f"for {chosen[2]} {extra[2]} in study {doc_index}{s}{i}.")
        sections.append((f"Section {s}", tuple(sentences)))
    total = sum(len(p.split()) for _, ps in sections for p in ps)
    meta = ArticleMeta(
        article_id=article_id,
        title=f"A study of {topic} ({doc_index})",
        authors=(f"Author {doc_index}", "Author B"),
        abstract=abstract,
        published=f"2024-01-{(doc_index % 28) + 1:02d}",
        pdf_url=None,
    )
    return CleanDocument(meta=meta, sections=tuple(sections), raw_word_count=total)


def make_corpus(n_docs: int = 20):
    topics = list(TOPIC_WORDS)
    return [make_document(i, topics[i % len(topics)]) for i in range(n_docs)]


@pytest.fixture
def fixture_corpus():
    return make_corpus(20)


CONFIG_YAML = """\
corpus_dir: corpus
index_dir: index
eval_dir: eval
cache_dir: cache/embeddings
embedding:
  kind: mock
  model_id: mock-ws
  dim: 32
llm:
  kind: echo
judge:
  kind: heuristic
  n_questions: 3
pipeline:
  retrieval: direct
  abstract_k: 8
  chunk_k: 3
  prompt: baseline
  chunk_strategy: semantic
chunking:
  threshold_percentile: 60.0
  min_chunk_words: 10
  max_chunk_words: 80
  recursive_target_words: 60
  recursive_overlap_words: 12
"""

EVAL_QUESTIONS = [
    ("e1", "Which regression predictor methods improve analysis results?", "Modeling",
     "regression"),
    ("e2", "What clustering centroid models help with segment analysis?", "Modeling",
     "clustering"),
    ("e3", "How can forecasting trend models improve seasonal analysis?", "Modeling",
     "time_series"),
    ("e4", "Which image segmentation feature methods aid detection?", "Modeling",
     "image_recognition"),
    ("e5", "What language token embedding models support sentiment parsing?", "Modeling",
     "natural_language_processing"),
]


def prepare_workspace(root, n_docs=10):
    """Write config.yaml, a populated corpus, and an eval-question fixture."""
    import json

    from litrag.ingest.store import CorpusStore

    root.mkdir(parents=True, exist_ok=True)
    (root / "config.yaml").write_text(CONFIG_YAML)
    store = CorpusStore(root / "corpus")
    docs = make_corpus(n_docs)
    store.save_metas([d.meta for d in docs])
    for doc in docs:
        store.save_clean(doc)
    with open(root / "questions.jsonl", "w") as fh:
        for qid, text, stage, sub in EVAL_QUESTIONS:
            fh.write(json.dumps({"id": qid, "text": text, "crisp_stage": stage,
                                 "subdomain": sub}) + "\n")
    return root


@pytest.fixture
def workspace(tmp_path, monkeypatch):
    root = prepare_workspace(tmp_path / "ws")
    monkeypatch.chdir(root)
    return root


# --- tiny local HTTP server ----------------------------------------------------

class _Handler(BaseHTTPRequestHandler):
    routes = {}
    hits = None

    def _respond(self, method):
        path = self.path.split("?")[0]
        key = (method, path)
        self.server.hits.append(key)
        handler = self.routes.get(key)
        if handler is None:
            self.send_response(404)
            self.end_headers()
            self.wfile.write(b"not found")
            return
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length) if length else b""
        status, content_type, payload = handler(self, body)
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.end_headers()
        self.wfile.write(payload)

    def do_GET(self):
        self._respond("GET")

    def do_POST(self):
        self._respond("POST")

    def log_message(self, *args):
        pass


@pytest.fixture
def http_server():
    """Start a throwaway HTTP server; yields (base_url, routes dict, hits list)."""
    servers = []

    def start(routes):
        handler = type("Handler", (_Handler,), {"routes": routes})
        server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
        server.hits = []
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        servers.append(server)
        return f"http://127.0.0.1:{server.server_address[1]}", server.hits

    yield start
    for server in servers:
        server.shutdown()
        server.server_close()
