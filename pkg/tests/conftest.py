import pytest

from parlor.fixtures import (
    CATALOG,
    EMBEDDINGS,
    GROUNDING_PROBES,
    POLICY_RULES,
    SCENARIO,
    WHISPER_CASES,
    fixture_path,
)
from parlor.ground import FixtureEmbedder
from parlor.model import load_catalog
from parlor.policy import MockPolicy
from parlor.runtime import load_scenario


@pytest.fixture(scope="session")
def catalog():
    return load_catalog(fixture_path(CATALOG))


@pytest.fixture(scope="session")
def embedder():
    return FixtureEmbedder.from_file(fixture_path(EMBEDDINGS))


@pytest.fixture()
def policy():
    # Function-scoped: call counters must reset between tests.
    return MockPolicy.from_file(fixture_path(POLICY_RULES))


@pytest.fixture(scope="session")
def scenario():
    return load_scenario(fixture_path(SCENARIO))


@pytest.fixture(scope="session")
def probes_path():
    return fixture_path(GROUNDING_PROBES)


@pytest.fixture(scope="session")
def cases_path():
    return fixture_path(WHISPER_CASES)
