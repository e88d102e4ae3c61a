from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fixture_server import FixtureServer  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS = FIXTURES / "corpus"


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture(scope="session")
def ledger() -> dict:
    return json.loads((CORPUS / "ledger.json").read_text())


@pytest.fixture(scope="session")
def corpus_server():
    server = FixtureServer(CORPUS).start()
    yield server
    server.stop()


@pytest.fixture(scope="session")
def corpus_seeds(corpus_server) -> list:
    """Seed sources for the corpus, rewritten to the live server port."""
    from okh.crawler import load_seed_list

    text = (CORPUS / "seeds.csv").read_text()
    text = text.replace("http://127.0.0.1:8943", corpus_server.base_url)
    sources, malformed = load_seed_list(text)
    assert not malformed
    return sources


@pytest.fixture(scope="session")
def crawled_corpus(corpus_seeds):
    """One shared crawl of the fixture corpus (records pre-dedupe, report)."""
    from okh.crawler import FetchPolicy, crawl

    policy = FetchPolicy(per_host_delay=0.02, request_timeout=5.0, parallelism=8)
    return crawl(corpus_seeds, policy)


@pytest.fixture(scope="session")
def corpus_records(crawled_corpus):
    from okh.crawler import dedupe

    records, _ = crawled_corpus
    return dedupe(records)
