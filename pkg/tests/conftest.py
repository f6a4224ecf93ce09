import pytest

from relmem.catalog import Catalog
from relmem.demo import build_demo_databases
from relmem.embedding import HashingEmbedder


@pytest.fixture(scope="session")
def demo_paths(tmp_path_factory):
    return build_demo_databases(tmp_path_factory.mktemp("demo"))


@pytest.fixture()
def demo_catalog(demo_paths):
    catalog = Catalog()
    for db_id, path in demo_paths.items():
        catalog.register_database(path, db_id)
    return catalog


@pytest.fixture()
def embedder():
    return HashingEmbedder()


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, in criterion order."""
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
