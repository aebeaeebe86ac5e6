"""Pluggable behavior generation: a deterministic mock and a remote client.

A policy backend proposes bundle *names* and dialogue from serialized room
context. Proposals are never executable on their own; the runtime always
passes them through grounding first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Protocol

from .converge import is_duplicate_dialogue
from .errors import ParseError, PolicyFailure
from .ground import Embedder, GroundingMatch

SCHEMA_VERSION = 1

# Stimulus text the runtime hands the policy when a heartbeat (not an
# incoming event) drives the decision.
HEARTBEAT_STIMULUS = "spontaneous heartbeat"


@dataclass(frozen=True)
class AgentSnapshot:
    agent_id: str
    display_name: str
    emotion: str
    relationship: dict[str, int]


@dataclass
class PolicyContext:
    """Everything a backend may condition on for one decision."""

    acting_agent_id: str
    agents: dict[str, AgentSnapshot]
    history: list[dict[str, Any]]  # last N serialized events, oldest first
    stimulus_text: str
    stimulus_priority: str
    target_agent_id: Optional[str] = None
    persona: str = ""

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "acting_agent_id": self.acting_agent_id,
            "agents": {
                aid: {
                    "display_name": snap.display_name,
                    "emotion": snap.emotion,
                    "relationship": snap.relationship,
                }
                for aid, snap in self.agents.items()
            },
            "history": self.history,
            "stimulus_text": self.stimulus_text,
            "stimulus_priority": self.stimulus_priority,
            "target_agent_id": self.target_agent_id,
            "persona": self.persona,
        }


@dataclass(frozen=True)
class PolicyProposal:
    """Names proposed for grounding. `self_name` marks a self-directed action."""

    talk_name: Optional[str] = None
    nontalk_name: Optional[str] = None
    self_name: Optional[str] = None
    dialogue: Optional[str] = None
    rationale: Optional[str] = None


class PolicyBackend(Protocol):
    backend_id: str

    def propose(self, context: PolicyContext) -> PolicyProposal: ...

    def generate_dialogue(
        self, context: PolicyContext, pair: tuple[GroundingMatch, Optional[GroundingMatch]], attempt: int = 0
    ) -> str: ...


@dataclass(frozen=True)
class MockRule:
    keyword: str
    talk_name: Optional[str] = None
    nontalk_name: Optional[str] = None
    self_name: Optional[str] = None
    dialogue: Optional[str] = None
    dialogue_alt: Optional[str] = None


DEFAULT_RULE = MockRule(
    keyword="",
    talk_name="ask for their opinion",
    nontalk_name="nod along",
    dialogue="So, {target} — what do you make of all this?",
    dialogue_alt="Go on, {target}, I want to hear your take.",
)


class MockPolicy:
    """Keyword-rule backend: fully deterministic, no model calls.

    Scans the active stimulus text against an ordered rule table; the first
    rule whose keyword appears (case-insensitive substring) wins. No match
    yields a generic ask-for-opinion proposal. Call counts are kept so tests
    can assert which paths invoke the backend.
    """

    backend_id = "mock"

    def __init__(self, rules: list[MockRule]):
        self.rules = rules
        self.propose_calls = 0
        self.dialogue_calls = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "MockPolicy":
        rules = []
        with Path(path).open("r", encoding="utf-8") as fh:
            for line_number, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"line {line_number}: invalid JSON: {exc}") from exc
                rules.append(
                    MockRule(
                        keyword=str(obj["keyword"]).lower(),
                        talk_name=obj.get("talk_name"),
                        nontalk_name=obj.get("nontalk_name"),
                        self_name=obj.get("self_name"),
                        dialogue=obj.get("dialogue"),
                        dialogue_alt=obj.get("dialogue_alt"),
                    )
                )
        return cls(rules)

    def _match(self, context: PolicyContext) -> MockRule:
        text = context.stimulus_text.lower()
        for rule in self.rules:
            if rule.keyword and rule.keyword in text:
                return rule
        return DEFAULT_RULE

    def propose(self, context: PolicyContext) -> PolicyProposal:
        self.propose_calls += 1
        rule = self._match(context)
        return PolicyProposal(
            talk_name=rule.talk_name,
            nontalk_name=rule.nontalk_name,
            self_name=rule.self_name,
            rationale=f"rule:{rule.keyword or 'default'}",
        )

    def generate_dialogue(
        self,
        context: PolicyContext,
        pair: tuple[GroundingMatch, Optional[GroundingMatch]],
        attempt: int = 0,
    ) -> str:
        self.dialogue_calls += 1
        rule = self._match(context)
        template = rule.dialogue or DEFAULT_RULE.dialogue
        if attempt > 0:
            template = rule.dialogue_alt or rule.dialogue or DEFAULT_RULE.dialogue_alt
        actor = context.agents[context.acting_agent_id].display_name
        target = actor
        if context.target_agent_id and context.target_agent_id in context.agents:
            target = context.agents[context.target_agent_id].display_name
        return template.format(actor=actor, target=target)


class RemotePolicy:
    """HTTP client for a text-generation service.

    POSTs `{"context": ..., "schema_version": 1}` and expects
    `{"talk_name": ..., "nontalk_name"?: ..., "dialogue"?: ...}`. Failures
    map to PolicyFailure kinds; the runtime turns those into a skipped
    cycle, never a corrupted room.
    """

    backend_id = "remote"

    def __init__(
        self,
        endpoint: str,
        timeout: float = 10.0,
        retries: int = 0,
        auth_header: Optional[str] = None,
    ):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self.auth_header = auth_header

    def _post(self, body: dict[str, Any]) -> dict[str, Any]:
        import requests

        headers = {}
        if self.auth_header:
            headers["Authorization"] = self.auth_header
        last_exc: Optional[Exception] = None
        for _ in range(self.retries + 1):
            try:
                resp = requests.post(
                    self.endpoint, json=body, timeout=self.timeout, headers=headers
                )
            except requests.Timeout as exc:
                last_exc = PolicyFailure("timeout", f"after {self.timeout}s")
                continue
            except requests.RequestException as exc:
                last_exc = PolicyFailure("transport", str(exc))
                continue
            if resp.status_code != 200:
                raise PolicyFailure("transport", f"status {resp.status_code}")
            try:
                return resp.json()
            except ValueError as exc:
                raise PolicyFailure("malformed", "response is not JSON") from exc
        assert last_exc is not None
        raise last_exc

    def propose(self, context: PolicyContext) -> PolicyProposal:
        obj = self._post(
            {"context": context.to_json_dict(), "schema_version": SCHEMA_VERSION}
        )
        talk = obj.get("talk_name")
        self_name = obj.get("self_name")
        if not talk and not self_name:
            raise PolicyFailure("malformed", "response missing talk_name")
        return PolicyProposal(
            talk_name=talk,
            nontalk_name=obj.get("nontalk_name"),
            self_name=self_name,
            dialogue=obj.get("dialogue"),
        )

    def generate_dialogue(
        self,
        context: PolicyContext,
        pair: tuple[GroundingMatch, Optional[GroundingMatch]],
        attempt: int = 0,
    ) -> str:
        obj = self._post(
            {
                "context": context.to_json_dict(),
                "schema_version": SCHEMA_VERSION,
                "grounded_pair": [m.to_json_dict() if m else None for m in pair],
                "attempt": attempt,
            }
        )
        dialogue = obj.get("dialogue")
        if not isinstance(dialogue, str):
            raise PolicyFailure("malformed", "response missing dialogue")
        return dialogue


def generate_dialogue(
    context: PolicyContext,
    pair: tuple[GroundingMatch, Optional[GroundingMatch]],
    backend: PolicyBackend,
    recent: Optional[list[tuple[str, int]]] = None,
    now: int = 0,
    window: int = 60,
    embedder: Optional[Embedder] = None,
    threshold: float = 0.9,
) -> Optional[str]:
    """Generate one line of dialogue for a grounded talk action.

    When dedup context is supplied, a near-duplicate of recent dialogue is
    regenerated once; a second duplicate is suppressed (returns None, which
    is not an error).
    """
    text = backend.generate_dialogue(context, pair, attempt=0)
    if recent is None or embedder is None:
        return text
    if not is_duplicate_dialogue(text, recent, now, window, embedder, threshold):
        return text
    text = backend.generate_dialogue(context, pair, attempt=1)
    if is_duplicate_dialogue(text, recent, now, window, embedder, threshold):
        return None
    return text
