import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "scripts"))

from build_fixture_dbs import build_all  # noqa: E402

FIXTURES = ROOT / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"


def pytest_sessionstart(session):
    # The .sqlite files are build outputs of the checked-in DDL; make sure
    # they exist (and match the DDL) before anything loads the corpora.
    build_all()


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN


@pytest.fixture(scope="session")
def sql_corpus():
    from explainloop.tasks import Origin, load_corpus

    return load_corpus(FIXTURES / "sql", Origin.SPIDER_STYLE)


@pytest.fixture(scope="session")
def python_corpus():
    from explainloop.tasks import Origin, load_corpus

    return load_corpus(FIXTURES / "python", Origin.MBPP_STYLE)


@pytest.fixture(scope="session")
def sql_by_id(sql_corpus):
    return {t.task_id: t for t in sql_corpus}


@pytest.fixture(scope="session")
def python_by_id(python_corpus):
    return {t.task_id: t for t in python_corpus}


@pytest.fixture(scope="session")
def demo_store():
    from explainloop.prompts import DemoStore

    return DemoStore.load_default()
