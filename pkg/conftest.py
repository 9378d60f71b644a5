"""
Shared test setup - puts src/ on the path and compiles snippets
"""

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).parent
sys.path.insert(0, str(ROOT / "src"))

CORPUS = ROOT / "corpus"

collect_ignore = ["examples"]


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture
def compile_text():
    """compile_text(source, passes=None, **config) -> Compilation; passes=None keeps the default order"""
    from optimizer.config import PassConfig
    from pipeline.compiler import compile_sources

    def run(source: str, passes=None, **config):
        if passes is not None:
            config["passes"] = list(passes)
        return compile_sources([("test.msol", source)], PassConfig.default(**config))

    return run


@pytest.fixture
def fixture_source():
    def read(name: str) -> str:
        return (CORPUS / f"{name}.msol").read_text(encoding="utf-8")

    return read


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run the timing-sensitive tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: timing-sensitive, runs only with --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)
