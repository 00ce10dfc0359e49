import json
from collections import Counter
from pathlib import Path

import pytest

from litrag.errors import (
    ApiUnavailable,
    ChecksumMismatch,
    DownloadFailed,
    EmptyBody,
    EmptyQuestion,
    GrobidRejected,
    GrobidUnavailable,
    MalformedFeed,
    MalformedXml,
)
from litrag.ingest import (
    ArticleMeta,
    ArxivClient,
    CorpusStore,
    CrispStage,
    GrobidEndpoint,
    ResearchQuestion,
    SearchQuery,
    condense_query,
    extract_tei,
    fetch_pdf,
    load_questions,
    parse_atom_feed,
    parse_tei,
)
from litrag.llm import ScriptedLlm

FIXTURE = Path(__file__).resolve().parent.parent / "fixtures" / "appendixA.jsonl"


# --- question fixture ------------------------------------------------------------

def test_fixture_loads_50_questions():
    questions = load_questions(FIXTURE)
    assert len(questions) == 50
    assert all(q.text.strip() for q in questions)
    assert len({q.id for q in questions}) == 50


def test_fixture_stage_partition():
    questions = load_questions(FIXTURE)
    stages = Counter(q.crisp_stage for q in questions)
    assert stages[CrispStage.DATA_PREPARATION] == 10
    assert stages[CrispStage.MODELING] == 35
    assert stages[CrispStage.EVALUATION] == 5


def test_question_1_mentions_stock_prices():
    q1 = load_questions(FIXTURE)[0]
    assert "stock prices" in q1.text
    assert q1.subdomain == "feature_selection"


# --- condense_query ----------------------------------------------------------------

def q(text="How should I select features for stock prices?"):
    return ResearchQuestion(id="qx", text=text, crisp_stage=CrispStage.MODELING,
                            subdomain="test")


def test_condense_echo_mock():
    llm = ScriptedLlm(["alpha beta"])
    result = condense_query(q(), llm)
    assert result == SearchQuery(text="alpha beta", word_count=2)


def test_condense_empty_question():
    question = ResearchQuestion.__new__(ResearchQuestion)
    object.__setattr__(question, "id", "qe")
    object.__setattr__(question, "text", "   ")
    object.__setattr__(question, "crisp_stage", CrispStage.MODELING)
    object.__setattr__(question, "subdomain", "t")
    with pytest.raises(EmptyQuestion):
        condense_query(question, ScriptedLlm(["unused"]))


def test_condense_truncates_overlong_output():
    llm = ScriptedLlm(["one two three four five six seven eight nine ten eleven twelve"])
    result = condense_query(q(), llm)
    assert result.word_count == 10
    assert result.text == "one two three four five six seven eight nine ten"


def test_condense_takes_first_nonblank_line():
    llm = ScriptedLlm(["\n\n  feature selection finance  \nsecond line ignored"])
    result = condense_query(q(), llm)
    assert result.text == "feature selection finance"


def test_condense_word_bound_holds_always():
    for response in ("", "a", " ".join("w" for _ in range(50)), "x\ny\nz"):
        result = condense_query(q(), ScriptedLlm([response]))
        assert result.word_count <= 10


# --- Atom feed parsing ------------------------------------------------------------

def atom_feed(entries):
    blocks = []
    for e in entries:
        authors = "".join(f"<author><name>{a}</name></author>" for a in e.get("authors", ()))
        pdf = (f'<link title="pdf" href="{e["pdf"]}" type="application/pdf"/>'
               if "pdf" in e else "")
        blocks.append(
            f"<entry><id>http://example.org/abs/{e['id']}</id>"
            f"<title>{e['title']}</title>{authors}"
            f"<summary>{e.get('summary', '')}</summary>"
            f"<published>{e.get('published', '2024-01-01T00:00:00Z')}</published>"
            f"{pdf}</entry>")
    return ('<?xml version="1.0" encoding="UTF-8"?>'
            '<feed xmlns="http://www.w3.org/2005/Atom">' + "".join(blocks) + "</feed>")


THREE_ENTRIES = [
    {"id": "2401.00001v1", "title": "First Paper", "authors": ("Ada L.", "Brian K."),
     "summary": "Abstract one.", "pdf": "http://example.org/pdf/1.pdf"},
    {"id": "2401.00002v1", "title": "Second  Paper", "authors": ("Carol M.",),
     "summary": "Abstract  two with   spaces.", "pdf": "http://example.org/pdf/2.pdf"},
    {"id": "2401.00003v2", "title": "Third Paper", "authors": (),
     "summary": ""},
]


def test_parse_recorded_feed():
    metas = parse_atom_feed(atom_feed(THREE_ENTRIES))
    assert [m.article_id for m in metas] == ["2401.00001v1", "2401.00002v1", "2401.00003v2"]
    assert metas[0].title == "First Paper"
    assert metas[0].authors == ("Ada L.", "Brian K.")
    assert metas[0].abstract == "Abstract one."
    assert metas[0].pdf_url == "http://example.org/pdf/1.pdf"
    assert metas[1].abstract == "Abstract two with spaces."
    assert metas[2].pdf_url is None
    assert metas[2].abstract_missing is True


def test_malformed_feed():
    with pytest.raises(MalformedFeed):
        parse_atom_feed("this is not xml <<<")
    with pytest.raises(MalformedFeed):
        parse_atom_feed("<html><body>wrong root</body></html>")


def test_search_maxresults_one(http_server):
    def handler(req, body):
        return 200, "application/atom+xml", atom_feed(THREE_ENTRIES).encode()

    base, hits = http_server({("GET", "/query"): handler})
    client = ArxivClient(endpoint=f"{base}/query", delay_seconds=0.0)
    metas = client.search_articles(SearchQuery("q", 1), max_results=1)
    assert [m.article_id for m in metas] == ["2401.00001v1"]


def test_search_dedups_by_id(http_server):
    duplicated = [THREE_ENTRIES[0], THREE_ENTRIES[1],
                  dict(THREE_ENTRIES[0], title="Duplicate")]

    def handler(req, body):
        return 200, "application/atom+xml", atom_feed(duplicated).encode()

    base, _ = http_server({("GET", "/query"): handler})
    client = ArxivClient(endpoint=f"{base}/query", delay_seconds=0.0)
    metas = client.search_articles(SearchQuery("q", 1), max_results=10)
    assert [m.article_id for m in metas] == ["2401.00001v1", "2401.00002v1"]
    assert metas[0].title == "First Paper"  # first occurrence kept


def test_search_api_unavailable():
    client = ArxivClient(endpoint="http://127.0.0.1:1/query", delay_seconds=0.0)
    with pytest.raises(ApiUnavailable):
        client.search_articles(SearchQuery("q", 1), max_results=1)


def test_search_pages_until_exhausted(http_server):
    all_entries = [dict(THREE_ENTRIES[0], id=f"2401.{i:05d}v1") for i in range(5)]

    def handler(req, body):
        from urllib.parse import parse_qs, urlparse
        qs = parse_qs(urlparse(req.path).query)
        start = int(qs["start"][0])
        page = int(qs["max_results"][0])
        return (200, "application/atom+xml",
                atom_feed(all_entries[start:start + page]).encode())

    base, hits = http_server({("GET", "/query"): handler})
    client = ArxivClient(endpoint=f"{base}/query", page_size=2, delay_seconds=0.0)
    metas = client.search_articles(SearchQuery("q", 1), max_results=10)
    assert [m.article_id for m in metas] == [e["id"] for e in all_entries]
    assert len(hits) >= 3  # multiple pages fetched


def test_search_stops_on_all_duplicate_pages(http_server):
    # a feed that always returns the same entries must not loop forever
    def handler(req, body):
        return 200, "application/atom+xml", atom_feed(THREE_ENTRIES).encode()

    base, hits = http_server({("GET", "/query"): handler})
    client = ArxivClient(endpoint=f"{base}/query", page_size=3, delay_seconds=0.0)
    metas = client.search_articles(SearchQuery("q", 1), max_results=50)
    assert len(metas) == 3
    assert len(hits) == 2  # second page was all duplicates, then stop


# --- fetch_pdf -------------------------------------------------------------------

PDF_BYTES = b"%PDF-1.4 fake pdf body"


def meta_with_pdf(base):
    return ArticleMeta(article_id="2401.00001v1", title="t", authors=("a",),
                       abstract="abs", published="2024",
                       pdf_url=f"{base}/pdf/1.pdf")


def test_fetch_pdf_happy_path(tmp_path, http_server):
    base, hits = http_server({("GET", "/pdf/1.pdf"):
                              lambda req, body: (200, "application/pdf", PDF_BYTES)})
    store = CorpusStore(tmp_path)
    handle = fetch_pdf(meta_with_pdf(base), store)
    assert handle.path.read_bytes() == PDF_BYTES
    assert handle.article_id == "2401.00001v1"


def test_fetch_pdf_idempotent(tmp_path, http_server):
    base, hits = http_server({("GET", "/pdf/1.pdf"):
                              lambda req, body: (200, "application/pdf", PDF_BYTES)})
    store = CorpusStore(tmp_path)
    first = fetch_pdf(meta_with_pdf(base), store)
    second = fetch_pdf(meta_with_pdf(base), store)
    assert first == second
    assert len(hits) == 1  # no second network call


def test_fetch_pdf_404(tmp_path, http_server):
    base, _ = http_server({})
    store = CorpusStore(tmp_path)
    with pytest.raises(DownloadFailed) as exc_info:
        fetch_pdf(meta_with_pdf(base), store)
    assert exc_info.value.article_id == "2401.00001v1"


def test_fetch_pdf_checksum_mismatch(tmp_path, http_server):
    base, _ = http_server({("GET", "/pdf/1.pdf"):
                           lambda req, body: (200, "application/pdf", PDF_BYTES)})
    store = CorpusStore(tmp_path)
    handle = fetch_pdf(meta_with_pdf(base), store)
    handle.path.write_bytes(b"tampered")
    with pytest.raises(ChecksumMismatch):
        fetch_pdf(meta_with_pdf(base), store)


# --- GROBID client ------------------------------------------------------------------

TEI_MINIMAL = """<?xml version="1.0" encoding="UTF-8"?>
<TEI xmlns="http://www.tei-c.org/ns/1.0">
  <teiHeader>
    <profileDesc><abstract><p>The abstract text.</p></abstract></profileDesc>
  </teiHeader>
  <text><body>
    <div><head>Introduction</head><p>First section text here.</p></div>
    <div><head>Methods</head><p>Second   section with details.</p>
      <figure><head>Figure 1</head><figDesc>A dropped caption.</figDesc></figure>
    </div>
  </body>
  <back><div><listBibl><biblStruct><note>Reference entry one.</note></biblStruct></listBibl></div></back>
  </text>
</TEI>
"""


def pdf_handle(tmp_path, data=PDF_BYTES):
    store = CorpusStore(tmp_path)
    return store.save_pdf("2401.00001v1", data)


def test_extract_tei_replay(tmp_path, http_server):
    def handler(req, body):
        assert b"fake pdf body" in body  # multipart contains the PDF bytes
        return 200, "application/xml", TEI_MINIMAL.encode()

    base, _ = http_server({("POST", "/api/processFulltextDocument"): handler})
    tei = extract_tei(pdf_handle(tmp_path), GrobidEndpoint(base_url=base))
    assert tei == TEI_MINIMAL  # byte-identical body


def test_extract_tei_service_down(tmp_path):
    with pytest.raises(GrobidUnavailable):
        extract_tei(pdf_handle(tmp_path),
                    GrobidEndpoint(base_url="http://127.0.0.1:1"))


def test_extract_tei_rejected(tmp_path, http_server):
    def handler(req, body):
        return 422, "text/plain", b"cannot parse empty pdf"

    base, _ = http_server({("POST", "/api/processFulltextDocument"): handler})
    with pytest.raises(GrobidRejected) as exc_info:
        extract_tei(pdf_handle(tmp_path, data=b""), GrobidEndpoint(base_url=base))
    assert exc_info.value.status == 422


# --- TEI parsing -------------------------------------------------------------------

META = ArticleMeta(article_id="2401.00001v1", title="t", authors=("a",),
                   abstract="abs", published="2024", pdf_url=None)


def test_parse_tei_sections_and_figure_dropped():
    doc = parse_tei(TEI_MINIMAL, META)
    headings = [h for h, _ in doc.sections]
    assert headings == ["Abstract", "Introduction", "Methods"]
    body = doc.body_text()
    assert "First section text here." in body
    assert "Second section with details." in body  # whitespace collapsed
    assert "dropped caption" not in body
    assert "Figure 1" not in body
    assert "Reference entry one" not in body
    assert "<" not in body and ">" not in body


def test_parse_tei_word_count_consistent():
    doc = parse_tei(TEI_MINIMAL, META)
    total = sum(len(p.split()) for _, ps in doc.sections for p in ps)
    assert doc.raw_word_count == total


def test_parse_tei_bibliography_only_is_empty():
    tei = """<TEI xmlns="http://www.tei-c.org/ns/1.0"><text>
      <back><div><listBibl><biblStruct><note>Only references.</note></biblStruct></listBibl></div></back>
    </text></TEI>"""
    with pytest.raises(EmptyBody):
        parse_tei(tei, META)


def test_parse_tei_nested_markup_flattened():
    tei = """<TEI xmlns="http://www.tei-c.org/ns/1.0"><text><body>
      <div><head>S</head><p>Uses <hi rend="italic">nested
          markup</hi> and <ref type="bibr">[3]</ref> inline.</p></div>
    </body></text></TEI>"""
    doc = parse_tei(tei, META)
    assert doc.sections[0][1] == ("Uses nested markup and [3] inline.",)


def test_parse_tei_formula_dropped_inside_paragraph():
    tei = """<TEI xmlns="http://www.tei-c.org/ns/1.0"><text><body>
      <div><p>Before <formula>x = y + z</formula> after.</p></div>
    </body></text></TEI>"""
    doc = parse_tei(tei, META)
    assert doc.sections[0][1] == ("Before after.",)


def test_parse_tei_malformed():
    with pytest.raises(MalformedXml):
        parse_tei("<TEI><unclosed>", META)


def test_parse_tei_deterministic():
    a = parse_tei(TEI_MINIMAL, META)
    b = parse_tei(TEI_MINIMAL, META)
    assert a == b


# --- corpus store -----------------------------------------------------------------

def test_store_round_trip(tmp_path):
    store = CorpusStore(tmp_path)
    metas = parse_atom_feed(atom_feed(THREE_ENTRIES))
    assert store.save_metas(metas) == 3
    assert store.save_metas(metas) == 0  # dedup on re-save
    assert store.load_metas() == metas

    doc = parse_tei(TEI_MINIMAL, metas[0])
    store.save_clean(doc)
    assert store.load_clean(metas[0].article_id) == doc
    assert store.iter_clean() == [doc]

    store.save_tei(metas[0].article_id, TEI_MINIMAL)
    assert store.load_tei(metas[0].article_id) == TEI_MINIMAL
