"""Agent-agent control: reply arbitration, chain decay, talk lock, dedup.

Reply-chain decay is the boundedness mechanism: continuation of a chain is
re-sampled at every hop with probability

    P(s) = clamp(1 - (s - 1) * alpha, 0, 1)

where s is the source depth of the stimulus being answered. The raw linear
form exceeds 1 at s = 0, so the value is clamped into [0, 1]; injected
events therefore always propagate. With alpha > 0 the probability hits zero
at s >= 1 + 1/alpha, which hard-bounds chain depth.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import ContractViolation, EmptyCandidates
from .ground import Embedder, cosine
from .model import TALK_EXECUTING_BIT, AgentState, Event
from .rng import SplitMix64


@dataclass(frozen=True)
class DecayConfig:
    alpha: float = 0.2
    enabled: bool = True

    def __post_init__(self):
        if self.alpha < 0:
            raise ContractViolation("alpha must be >= 0")


@dataclass(frozen=True)
class StimulusCandidate:
    """A priority-B stimulus competing for one agent's attention."""

    event: Event
    relationship_score: int


class LockDecision(Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"


def reply_probability(source: int, config: DecayConfig) -> float:
    """Continuation probability for a stimulus at depth `source`."""
    if source < 0:
        raise ContractViolation(f"source must be >= 0, got {source}")
    if not config.enabled:
        return 1.0
    p = 1.0 - (source - 1) * config.alpha
    return min(1.0, max(0.0, p))


def sample_continuation(source: int, config: DecayConfig, rng: SplitMix64) -> bool:
    """Sample one continuation decision. Consumes exactly one draw."""
    return rng.bernoulli(reply_probability(source, config))


def max_chain_depth(config: DecayConfig) -> int:
    """Largest source value any decay-on chain can reach: floor(1/alpha) + 1."""
    if not config.enabled or config.alpha == 0:
        raise ContractViolation("depth is unbounded without decay")
    return int(1.0 / config.alpha) + 1


def select_reply_stimulus(
    agent: AgentState,
    candidates: list[StimulusCandidate],
    rng: SplitMix64,
) -> StimulusCandidate:
    """Pick who the agent answers: highest relationship score, ties random.

    A tie-break consumes one draw from the agent's stream; a unique maximum
    consumes none.
    """
    if not candidates:
        raise EmptyCandidates(f"agent {agent.agent_id} has no stimuli to select")
    best = max(c.relationship_score for c in candidates)
    tied = [c for c in candidates if c.relationship_score == best]
    if len(tied) == 1:
        return tied[0]
    return tied[rng.randrange(len(tied))]


def try_acquire_talk_lock(agent: AgentState, event: Event) -> LockDecision:
    """Gate a bundle assignment on the agent's talk state.

    Free lock: acquire. Held lock: only source-0 inputs interrupt (the
    caller flags the superseded action); everything else is rejected with
    the agent untouched.
    """
    if not agent.is_talk_locked():
        agent.talk_state |= TALK_EXECUTING_BIT
        return LockDecision.ACCEPTED
    if event.source == 0:
        return LockDecision.ACCEPTED  # interrupt; lock stays held by the new action
    return LockDecision.REJECTED


def release_talk_lock(agent: AgentState) -> None:
    agent.talk_state &= ~TALK_EXECUTING_BIT


def is_duplicate_dialogue(
    text: str,
    recent: list[tuple[str, int]],
    now: int,
    window: int,
    embedder: Embedder,
    threshold: float,
) -> bool:
    """Timestamp-gated near-duplicate check on recent outgoing dialogue.

    True iff some utterance within [now - window, now] is an exact string
    match or has cosine similarity >= threshold under the embedder.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ContractViolation("threshold must lie in [0, 1]")
    in_window = [(u, t) for (u, t) in recent if now - window <= t <= now]
    if not in_window:
        return False
    if any(u == text for u, _ in in_window):
        return True
    v = embedder.embed(text)
    for utterance, _ in in_window:
        if cosine(v, embedder.embed(utterance)) >= threshold:
            return True
    return False
