"""Player-agent soft steering.

A whisper is a short natural-language phrase routed at priority A /
source 0. With a distinct target it guides policy bundle-pair selection
(to-other); without one it is matched directly against the to-self pool,
bypassing the policy backend entirely. Either way the result is exactly one
planned, executable behavior — whispers are never dropped or queued behind
lower-priority stimuli.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Optional

from .errors import ContractViolation, UnknownAgent
from .ground import Embedder, GroundingConfig, GroundingMatch, ground_pair, ground_self
from .model import AgentState, BundleCatalog, Event, EventKind, PriorityClass
from .policy import AgentSnapshot, PolicyBackend, PolicyContext

if TYPE_CHECKING:
    from .runtime import Room

WHISPER_MAX_CHARS = 280  # gateway-enforced cap


@dataclass(frozen=True)
class Whisper:
    player_id: str
    agent_id: str
    text: str
    logical_time: int
    target_id: Optional[str] = None

    def __post_init__(self):
        if not self.text:
            raise ContractViolation("whisper text must be non-empty")


class WhisperRoute(Enum):
    TO_OTHER = "to_other"
    TO_SELF = "to_self"


@dataclass
class PlannedBehavior:
    """A grounded, executable behavior awaiting execution.

    To-other plans carry a talk match (plus optional non-talk); to-self
    plans carry exactly one self match. Whisper-born plans are always
    priority A, source 0.
    """

    agent_id: str
    kind: EventKind
    source: int
    priority: PriorityClass
    target_id: Optional[str] = None
    talk: Optional[GroundingMatch] = None
    nontalk: Optional[GroundingMatch] = None
    self_match: Optional[GroundingMatch] = None
    dialogue_context: Optional[PolicyContext] = None
    whisper_text: Optional[str] = None
    reply_to: Optional[int] = None
    policy_backend_id: Optional[str] = None

    def fell_back(self) -> bool:
        primary = self.talk or self.self_match
        return bool(primary and primary.fell_back)


def route_whisper(w: Whisper) -> WhisperRoute:
    """To-other iff a distinct target is named; self-targeting folds to to-self."""
    if w.target_id is not None and w.target_id != w.agent_id:
        return WhisperRoute.TO_OTHER
    return WhisperRoute.TO_SELF


def build_policy_context(
    agents: dict[str, AgentState],
    history: list[Event],
    acting_agent_id: str,
    stimulus_text: str,
    stimulus_priority: PriorityClass,
    target_agent_id: Optional[str] = None,
    history_window: int = 20,
) -> PolicyContext:
    """Serialize room state + recent history for a policy decision."""
    snapshots = {
        aid: AgentSnapshot(
            agent_id=aid,
            display_name=a.display_name,
            emotion=a.emotion.value,
            relationship=dict(a.relationship),
        )
        for aid, a in agents.items()
    }
    window = [e.to_json_dict() for e in history[-history_window:]]
    acting = agents[acting_agent_id]
    return PolicyContext(
        acting_agent_id=acting_agent_id,
        agents=snapshots,
        history=window,
        stimulus_text=stimulus_text,
        stimulus_priority=stimulus_priority.value,
        target_agent_id=target_agent_id,
        persona=acting.persona,
    )


def whisper_to_other(
    w: Whisper,
    room: "Room",
    policy: PolicyBackend,
    embedder: Embedder,
    config: GroundingConfig,
) -> PlannedBehavior:
    """Policy-guided path: whisper conditions bundle-pair selection and dialogue."""
    if route_whisper(w) is not WhisperRoute.TO_OTHER:
        raise ContractViolation("whisper_to_other requires a distinct target")
    if w.target_id not in room.agents:
        raise UnknownAgent(w.target_id or "")
    agent = room.agents[w.agent_id]
    context = build_policy_context(
        room.agents,
        room.history,
        acting_agent_id=w.agent_id,
        stimulus_text=w.text,
        stimulus_priority=PriorityClass.A,
        target_agent_id=w.target_id,
        history_window=room.config.history_window,
    )
    proposal = policy.propose(context)
    talk, nontalk = ground_pair(
        proposal.talk_name or "",
        proposal.nontalk_name,
        room.catalog,
        agent.emotion,
        embedder,
        config,
    )
    return PlannedBehavior(
        agent_id=w.agent_id,
        kind=EventKind.WHISPER,
        source=0,
        priority=PriorityClass.A,
        target_id=w.target_id,
        talk=talk,
        nontalk=nontalk,
        dialogue_context=context,
        whisper_text=w.text,
        policy_backend_id=policy.backend_id,
    )


def whisper_to_self(
    w: Whisper,
    room: "Room",
    embedder: Embedder,
    catalog: BundleCatalog,
    config: GroundingConfig,
) -> PlannedBehavior:
    """Direct-match path: no policy call, threshold fallback to the safe default."""
    if route_whisper(w) is not WhisperRoute.TO_SELF:
        raise ContractViolation("whisper_to_self requires no distinct target")
    agent = room.agents[w.agent_id]
    match = ground_self(w.text, catalog, agent.emotion, embedder, config)
    return PlannedBehavior(
        agent_id=w.agent_id,
        kind=EventKind.WHISPER,
        source=0,
        priority=PriorityClass.A,
        self_match=match,
        whisper_text=w.text,
    )
