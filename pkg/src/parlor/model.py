"""Core domain types: bundles, catalogs, events, agents, rooms.

The catalog file format is JSONL, one bundle object per line:

    {"id": "...", "name": "...", "pool": "talk" | "non_talk" | "to_self",
     "emotion_valence": ["happy" | "sad" | "angry", ...],
     "pglv": 1 | 2 | 3,
     "relationship_delta": int (optional, default 0),
     "safe_default": bool (optional, default false),
     "metadata": {...} (optional, carried opaquely)}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Optional

from .errors import ContractViolation, ParseError, ValidationError


class EmotionState(Enum):
    HAPPY = "happy"
    SAD = "sad"
    ANGRY = "angry"
    NEUTRAL = "neutral"


class PoolKind(Enum):
    TALK = "talk"
    NON_TALK = "non_talk"
    TO_SELF = "to_self"


class PriorityClass(Enum):
    """A = player-originated, B = response to events, C = spontaneous."""

    A = "A"
    B = "B"
    C = "C"


class EventKind(Enum):
    INJECTED_SOCIAL = "injected_social"
    AUTONOMOUS_ACTION = "autonomous_action"
    REPLY = "reply"
    WHISPER = "whisper"
    TRIGGER = "trigger"
    SELF_ACTION = "self_action"
    FALLBACK = "fallback"


# Event kinds that carry source 0 (player- or system-originated).
SOURCE_ZERO_KINDS = frozenset(
    {EventKind.INJECTED_SOCIAL, EventKind.WHISPER, EventKind.TRIGGER}
)

# Reference full-scale pool counts; a validation profile, not a requirement.
FULL_PROFILE_COUNTS = {PoolKind.TALK: 258, PoolKind.NON_TALK: 90, PoolKind.TO_SELF: 30}


@dataclass(frozen=True)
class BehaviorBundle:
    """One executable behavior unit.

    `metadata` carries animation/navigation placeholders opaquely; the engine
    never interprets it.
    """

    id: str
    name: str
    pool: PoolKind
    emotion_valence: frozenset[EmotionState] = frozenset()
    pglv: int = 1
    relationship_delta: int = 0
    is_safe_default: bool = False
    metadata: dict[str, Any] = field(default_factory=dict, hash=False, compare=False)

    def to_json_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "id": self.id,
            "name": self.name,
            "pool": self.pool.value,
            "emotion_valence": sorted(e.value for e in self.emotion_valence),
            "pglv": self.pglv,
        }
        if self.relationship_delta:
            out["relationship_delta"] = self.relationship_delta
        if self.is_safe_default:
            out["safe_default"] = True
        if self.metadata:
            out["metadata"] = self.metadata
        return out


@dataclass
class BundleCatalog:
    bundles: list[BehaviorBundle]

    def pool(self, kind: PoolKind) -> list[BehaviorBundle]:
        return [b for b in self.bundles if b.pool == kind]

    def pool_counts(self) -> dict[PoolKind, int]:
        counts = {kind: 0 for kind in PoolKind}
        for b in self.bundles:
            counts[b.pool] += 1
        return counts

    def by_id(self, bundle_id: str) -> Optional[BehaviorBundle]:
        return self._index.get(bundle_id)

    def safe_default(self, kind: PoolKind) -> BehaviorBundle:
        for b in self.bundles:
            if b.pool == kind and b.is_safe_default:
                return b
        raise ValidationError(f"pool {kind.value} has no safe default")

    def matches_full_profile(self) -> bool:
        return self.pool_counts() == FULL_PROFILE_COUNTS

    def __post_init__(self):
        self._index = {b.id: b for b in self.bundles}


def _parse_bundle(obj: dict[str, Any], line_number: int) -> BehaviorBundle:
    try:
        pool = PoolKind(obj["pool"])
        valence = frozenset(EmotionState(v) for v in obj.get("emotion_valence", []))
        return BehaviorBundle(
            id=str(obj["id"]),
            name=str(obj["name"]),
            pool=pool,
            emotion_valence=valence,
            pglv=int(obj["pglv"]),
            relationship_delta=int(obj.get("relationship_delta", 0)),
            is_safe_default=bool(obj.get("safe_default", False)),
            metadata=dict(obj.get("metadata", {})),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ParseError(f"line {line_number}: bad bundle object: {exc}") from exc


def validate_catalog(bundles: Iterable[BehaviorBundle]) -> BundleCatalog:
    """Validate and assemble a catalog, naming the offending bundle on error."""
    bundles = list(bundles)
    seen: set[str] = set()
    for b in bundles:
        if b.id in seen:
            raise ValidationError(f"duplicate bundle id {b.id!r}")
        seen.add(b.id)
        if b.pglv not in (1, 2, 3):
            raise ValidationError(f"bundle {b.id!r}: pglv {b.pglv} out of range 1..3")
    for kind in PoolKind:
        pool = [b for b in bundles if b.pool == kind]
        if not pool:
            raise ValidationError(f"pool {kind.value} is empty")
        defaults = [b for b in pool if b.is_safe_default]
        if len(defaults) == 0:
            raise ValidationError(f"pool {kind.value} has no safe-default bundle")
        if len(defaults) > 1:
            ids = ", ".join(b.id for b in defaults)
            raise ValidationError(f"pool {kind.value} has multiple safe defaults: {ids}")
        # The safe default bypasses the emotion and content filters, so it
        # must be executable under every filter state.
        default = defaults[0]
        if default.emotion_valence or default.pglv != 1:
            raise ValidationError(
                f"safe default {default.id!r} must be valence-free with pglv 1"
            )
    return BundleCatalog(bundles=bundles)


def load_catalog(path: str | Path) -> BundleCatalog:
    """Load and validate a JSONL bundle catalog."""
    path = Path(path)
    bundles: list[BehaviorBundle] = []
    with path.open("r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"line {line_number}: invalid JSON: {exc}") from exc
            bundles.append(_parse_bundle(obj, line_number))
    return validate_catalog(bundles)


def save_catalog(catalog: BundleCatalog, path: str | Path) -> None:
    """Serialize a catalog back to JSONL (round-trips bit-exact)."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for b in catalog.bundles:
            fh.write(json.dumps(b.to_json_dict(), sort_keys=True) + "\n")


@dataclass
class Event:
    """A timestamped stimulus in a room.

    `source` encodes interaction origin and reply depth: 0 = injected/player,
    1 = autonomous, >= 2 = reply hops. `reply_to` points at the answered
    event so chains are reconstructible from traces.
    """

    event_id: int
    logical_time: int
    actor: str
    kind: EventKind
    source: int
    target: Optional[str] = None
    bundle_pair: Optional[tuple[str, Optional[str]]] = None
    dialogue: Optional[str] = None
    whisper_text: Optional[str] = None
    reply_to: Optional[int] = None

    def __post_init__(self):
        if (self.source == 0) != (self.kind in SOURCE_ZERO_KINDS):
            raise ContractViolation(
                f"kind {self.kind.value} incompatible with source {self.source}"
            )
        if self.kind is EventKind.REPLY and self.source < 2:
            raise ContractViolation("reply events carry source >= 2")
        if self.kind is EventKind.AUTONOMOUS_ACTION and self.source != 1:
            raise ContractViolation("autonomous actions carry source = 1")

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "event_id": self.event_id,
            "logical_time": self.logical_time,
            "actor": self.actor,
            "target": self.target,
            "kind": self.kind.value,
            "source": self.source,
            "bundle_pair": list(self.bundle_pair) if self.bundle_pair else None,
            "dialogue": self.dialogue,
            "whisper_text": self.whisper_text,
            "reply_to": self.reply_to,
        }

    @classmethod
    def from_json_dict(cls, obj: dict[str, Any]) -> "Event":
        pair = obj.get("bundle_pair")
        return cls(
            event_id=int(obj["event_id"]),
            logical_time=int(obj["logical_time"]),
            actor=str(obj["actor"]),
            target=obj.get("target"),
            kind=EventKind(obj["kind"]),
            source=int(obj["source"]),
            bundle_pair=(pair[0], pair[1]) if pair else None,
            dialogue=obj.get("dialogue"),
            whisper_text=obj.get("whisper_text"),
            reply_to=obj.get("reply_to"),
        )


TALK_EXECUTING_BIT = 1  # bit 0 of AgentState.talk_state


@dataclass
class AgentState:
    """Per-character runtime state."""

    agent_id: str
    display_name: str
    emotion: EmotionState = EmotionState.NEUTRAL
    relationship: dict[str, int] = field(default_factory=dict)
    talk_state: int = 0
    heartbeat_period: int = 40
    next_heartbeat: int = 40
    rng_seed: int = 0
    persona: str = ""

    def is_talk_locked(self) -> bool:
        return bool(self.talk_state & TALK_EXECUTING_BIT)

    def relationship_toward(self, peer_id: str) -> int:
        return self.relationship.get(peer_id, 0)

    def apply_relationship_delta(self, peer_id: str, delta: int) -> None:
        if peer_id == self.agent_id:
            return  # no self-entry, ever
        self.relationship[peer_id] = self.relationship.get(peer_id, 0) + delta


def classify_priority(event: Event) -> PriorityClass:
    """Map an event to its decision-priority class. Total over valid events."""
    if event.source == 0:
        return PriorityClass.A
    if event.kind is EventKind.REPLY or event.source >= 2:
        return PriorityClass.B
    return PriorityClass.C


def next_source(incoming_source: int) -> int:
    """Source value a reply to `incoming_source` carries.

    Replies start at 2: source 1 is reserved for autonomous actions, so a
    reply to an injected source-0 event is itself a first-hop reply.
    """
    if incoming_source < 0:
        raise ContractViolation(f"source must be >= 0, got {incoming_source}")
    if incoming_source == 0:
        return 2
    return incoming_source + 1
