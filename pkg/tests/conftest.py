import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from betamix import crdl

DATA = Path(__file__).parent.parent / "src" / "betamix" / "data"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def bundled_route() -> crdl.Route:
    return crdl.load_route(DATA / "problem13.crdl")


@pytest.fixture(scope="session")
def corpus_lines() -> list[str]:
    text = (DATA / "descriptions.txt").read_text(encoding="utf-8")
    return [line for line in text.splitlines() if line.strip()]


@pytest.fixture()
def fresh_store(tmp_path):
    from betamix import store

    return store.Store(tmp_path / "store")
