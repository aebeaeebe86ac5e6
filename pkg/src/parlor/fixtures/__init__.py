"""Accessors for the JSONL fixtures shipped with the package."""

from importlib import resources
from pathlib import Path


def fixture_path(name: str) -> Path:
    """Filesystem path of a shipped fixture file."""
    return Path(resources.files(__package__) / name)


CATALOG = "catalog_sample.jsonl"
EMBEDDINGS = "embeddings_fixture.jsonl"
POLICY_RULES = "policy_rules.jsonl"
GROUNDING_PROBES = "probes_grounding.jsonl"
WHISPER_CASES = "cases_whisper.jsonl"
SCENARIO = "scenario_party.jsonl"
