from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from litrank.corpus import CorpusStore, SplitterConfig, ingest
from litrank.engine import Engine, EngineSettings
from litrank.index import build_index

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def fixture_store(tmp_path_factory) -> CorpusStore:
    """The bundled 100-paragraph corpus, ingested once per session."""
    out = tmp_path_factory.mktemp("corpus100")
    ingest(DATA_DIR / "corpus_100.jsonl", out, SplitterConfig())
    store = CorpusStore(out)
    yield store
    store.close()


@pytest.fixture(scope="session")
def fixture_index(fixture_store):
    return build_index(fixture_store)


@pytest.fixture(scope="session")
def fixture_index_dir(fixture_index, tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("index100")
    fixture_index.save(out)
    return out


@pytest.fixture(scope="session")
def builtin_engine(fixture_store, fixture_index) -> Engine:
    return Engine(fixture_store, fixture_index, EngineSettings())


@pytest.fixture(scope="session")
def ten_queries() -> list[str]:
    return json.loads((DATA_DIR / "queries_10.json").read_text())


@pytest.fixture(scope="session")
def golden_response() -> dict:
    return json.loads((DATA_DIR / "golden_query_response.json").read_text())


@pytest.fixture()
def tiny_corpus_dir(tmp_path) -> Path:
    """Three small hand-written documents for unit-level checks."""
    docs = [
        {
            "paper_id": "alpha",
            "metadata": {"title": "Viral incubation analysis"},
            "abstract": [{"text": "We study the incubation window."}],
            "body_text": [
                {"text": "The incubation period lasts five days. "
                         "Fever and cough are common. "
                         "Severe cases need oxygen.", "section": "intro"},
                {"text": "Contact tracing reduces spread. "
                         "Masks help in crowded rooms.", "section": "methods"},
            ],
            "publish_date": "2020-03-01",
        },
        {
            "paper_id": "bravo",
            "metadata": {"title": "Risk factor survey"},
            "abstract": [{"text": "Risk factors include obesity."}],
            "body_text": [
                {"text": "Diabetes and hypertension raise mortality. "
                         "Smoking worsens outcomes in elderly patients.",
                 "section": "results"},
            ],
            "publish_date": "2020-05-20",
        },
        {
            "paper_id": "charlie",
            "metadata": {"title": "Abstract only note"},
            "abstract": [{"text": "A short note about vaccine timelines."}],
            "body_text": [],
        },
    ]
    src = tmp_path / "src"
    src.mkdir()
    for doc in docs:
        (src / f"{doc['paper_id']}.json").write_text(json.dumps(doc))
    return src


@pytest.fixture()
def tiny_store(tiny_corpus_dir, tmp_path) -> CorpusStore:
    out = tmp_path / "store"
    ingest(tiny_corpus_dir, out)
    store = CorpusStore(out)
    yield store
    store.close()
