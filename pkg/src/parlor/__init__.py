"""parlor: a deterministic multi-agent room engine.

Player-owned characters act in shared rooms under three control layers:
reply arbitration with probabilistic chain decay (converge), embedding
grounding of intent to executable behavior bundles with safe fallback
(ground), and whisper soft steering (whisper). A harness reproduces the
controlled decay, grounding, and whisper experiments at desk scale, and a
gateway serves a live control panel over WebSocket.
"""

__version__ = "0.1.0"

from .model import (
    AgentState,
    BehaviorBundle,
    BundleCatalog,
    EmotionState,
    Event,
    EventKind,
    PoolKind,
    PriorityClass,
    classify_priority,
    load_catalog,
    next_source,
    save_catalog,
)
from .converge import (
    DecayConfig,
    LockDecision,
    StimulusCandidate,
    is_duplicate_dialogue,
    reply_probability,
    sample_continuation,
    select_reply_stimulus,
    try_acquire_talk_lock,
)
from .ground import (
    Embedder,
    FixtureEmbedder,
    GroundingConfig,
    GroundingMatch,
    RemoteEmbedder,
    cosine,
    filter_candidates,
    ground_pair,
    ground_self,
    retrieve,
)
from .policy import MockPolicy, PolicyContext, PolicyProposal, RemotePolicy
from .whisper import PlannedBehavior, Whisper, WhisperRoute, route_whisper
from .runtime import Room, RoomConfig, TraceRecord, load_scenario, replay_trace

__all__ = [
    "AgentState",
    "BehaviorBundle",
    "BundleCatalog",
    "DecayConfig",
    "Embedder",
    "EmotionState",
    "Event",
    "EventKind",
    "FixtureEmbedder",
    "GroundingConfig",
    "GroundingMatch",
    "LockDecision",
    "MockPolicy",
    "PlannedBehavior",
    "PolicyContext",
    "PolicyProposal",
    "PoolKind",
    "PriorityClass",
    "RemoteEmbedder",
    "RemotePolicy",
    "Room",
    "RoomConfig",
    "StimulusCandidate",
    "TraceRecord",
    "Whisper",
    "WhisperRoute",
    "classify_priority",
    "cosine",
    "filter_candidates",
    "ground_pair",
    "ground_self",
    "is_duplicate_dialogue",
    "load_catalog",
    "load_scenario",
    "next_source",
    "replay_trace",
    "reply_probability",
    "retrieve",
    "route_whisper",
    "sample_continuation",
    "save_catalog",
    "select_reply_stimulus",
    "try_acquire_talk_lock",
]
