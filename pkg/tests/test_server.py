import pytest
from fastapi.testclient import TestClient

from litrag.cli import main
from litrag.config import load_config
from litrag.errors import ProviderUnavailable
from litrag.runtime import RuntimeStack
from litrag.server import create_app


@pytest.fixture
def client(workspace):
    assert main(["chunk", "--config", "config.yaml"]) == 0
    assert main(["index", "--config", "config.yaml"]) == 0
    config = load_config("config.yaml")
    app = create_app(config)
    return TestClient(app, raise_server_exceptions=False)


QUESTION = "Which regression predictor methods improve analysis results?"


def test_ask_returns_ordered_chunks(client):
    resp = client.post("/api/ask", json={"question": QUESTION})
    assert resp.status_code == 200
    body = resp.json()
    assert body["answer"]
    scores = [c["score"] for c in body["chunks"]]
    assert scores == sorted(scores, reverse=True)
    assert len(body["chunks"]) == 3  # config chunk_k
    assert body["word_count"] == sum(c["word_count"] for c in body["chunks"])
    assert body["references"]
    assert body["config"]["retrieval"] == "direct"


def test_ask_overrides_respected(client):
    resp = client.post("/api/ask", json={
        "question": QUESTION,
        "overrides": {"retrieval": "abstract-first", "prompt": "enhanced",
                      "chunk_k": 2, "abstract_k": 4},
    })
    assert resp.status_code == 200
    body = resp.json()
    assert body["config"]["retrieval"] == "abstract-first"
    assert body["config"]["prompt"] == "enhanced"
    assert len(body["chunks"]) == 2


def test_malformed_body_400(client):
    resp = client.post("/api/ask", content=b"{not json",
                       headers={"Content-Type": "application/json"})
    assert resp.status_code == 400
    assert resp.json()["code"] == "bad_request"

    resp = client.post("/api/ask", json={"no_question": True})
    assert resp.status_code == 400
    assert resp.json()["code"] == "bad_request"


def test_invalid_override_combination_400(client):
    resp = client.post("/api/ask", json={
        "question": QUESTION,
        "overrides": {"chunk_k": 10, "abstract_k": 2},
    })
    assert resp.status_code == 400
    assert resp.json()["code"] == "bad_request"


def test_provider_down_503(workspace):
    assert main(["chunk", "--config", "config.yaml"]) == 0
    assert main(["index", "--config", "config.yaml"]) == 0
    config = load_config("config.yaml")
    stack = RuntimeStack(config)

    class DownProvider:
        model_id = "down"
        dim = 32

        def embed(self, texts):
            raise ProviderUnavailable("embedding service down")

    stack.provider = DownProvider()
    client = TestClient(create_app(config, stack), raise_server_exceptions=False)
    resp = client.post("/api/ask", json={"question": QUESTION})
    assert resp.status_code == 503
    assert resp.json()["code"] == "provider_unavailable"


def test_missing_index_503(workspace):
    config = load_config("config.yaml")  # no chunk/index built
    client = TestClient(create_app(config), raise_server_exceptions=False)
    resp = client.post("/api/ask", json={"question": QUESTION})
    assert resp.status_code == 503
    assert resp.json()["code"] == "index_missing"


def test_corpus_stats(client):
    resp = client.get("/api/corpus/stats")
    assert resp.status_code == 200
    body = resp.json()
    assert body["articles"] == 10
    assert body["clean_documents"] == 10
    assert body["chunks"]["semantic"] > 0
    assert body["indexes"]["abstracts"] == 10


def test_configs_endpoint(client):
    resp = client.get("/api/configs")
    assert resp.status_code == 200
    body = resp.json()
    assert body["default"]["chunk_k"] == 3
    assert set(body["labeled"]) >= {"baseline", "enhanced"}
    assert body["retrieval_modes"] == ["direct", "abstract-first"]


def test_eval_score_endpoint(client):
    ask = client.post("/api/ask", json={"question": QUESTION}).json()
    resp = client.post("/api/eval/score", json={
        "question": QUESTION,
        "answer": ask["answer"],
        "chunks": [c["text"] for c in ask["chunks"]],
    })
    assert resp.status_code == 200
    body = resp.json()
    assert 0.0 <= body["context_relevance"] <= 1.0
    assert body["faithfulness"] is None or 0.0 <= body["faithfulness"] <= 1.0
    assert -1.0 <= body["answer_relevance"] <= 1.0
    assert body["context_word_count"] == sum(
        len(c["text"].split()) for c in ask["chunks"])


def test_cli_and_http_same_pipeline(client, workspace, capsys):
    # shared-fixture equality: identical question through both surfaces
    http_body = client.post("/api/ask", json={"question": QUESTION}).json()
    assert main(["ask", "--config", "config.yaml", "--question", QUESTION]) == 0
    cli_out = capsys.readouterr().out
    assert http_body["answer"] in cli_out
    for ref in http_body["references"]:
        assert ref["title"] in cli_out
