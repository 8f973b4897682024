import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nameorigin.llm.types import RunPolicy
from nameorigin.taxonomy import load_taxonomy

MOCK_SCRIPTS = Path(__file__).parent / "data" / "mock_scripts"


@pytest.fixture(scope="session")
def tax():
    return load_taxonomy()


@pytest.fixture(scope="session")
def nat_space(tax):
    from nameorigin.taxonomy import Granularity

    return list(tax.label_space(Granularity.NATIONALITY).labels)


@pytest.fixture
def fast_policy():
    """Retry policy with negligible backoff so fault tests stay quick."""
    return RunPolicy(max_concurrency=50, max_retries=3,
                     backoff_base=0.001, backoff_factor=2.0, jitter=False)


def script_path(name: str) -> Path:
    return MOCK_SCRIPTS / name


@pytest.fixture
def scripts():
    return script_path
