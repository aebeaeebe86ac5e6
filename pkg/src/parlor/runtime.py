"""The room engine: virtual clock, priority routing, execution, tracing.

One round is one logical tick (1 tick models 1 second; heartbeats default
to 40 ticks). Each round:

  1. deliver pending player/system inputs (priority A, FIFO),
  2. process priority-B stimuli, iterating agents in sorted-id order —
     a reply emitted mid-round lands in a later agent's slot the same
     round, so a chain can advance two hops per tick when the responder
     order lines up,
  3. fire due heartbeats (priority C) for agents that are idle this round,
  4. check safety bounds (depth cap, event ceiling).

The bounds are checked only at the end of a round, so a chain can emit one
event past the depth cap before it is halted; that overshoot is visible in
recorded max depths and is deliberate.

Every emitted event gets one trace record; rejected stimuli, failed decay
draws, and safety halts get decision records. The trace (JSONL, header line
first) replays to an identical final room state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from . import converge
from .converge import DecayConfig, LockDecision, StimulusCandidate
from .errors import (
    ContractViolation,
    IOFailure,
    ParseError,
    PolicyFailure,
    ReplayError,
    UnknownAgent,
    UnknownBundle,
    ValidationError,
)
from .ground import Embedder, GroundingConfig, GroundingMatch, ground_pair, ground_self
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
    next_source,
)
from .policy import HEARTBEAT_STIMULUS, PolicyBackend, generate_dialogue
from .rng import SplitMix64, derive_seed, derive_stream
from .whisper import (
    PlannedBehavior,
    Whisper,
    WhisperRoute,
    build_policy_context,
    route_whisper,
    whisper_to_other,
    whisper_to_self,
)

TRACE_SCHEMA = "parlor.trace"
TRACE_VERSION = 1

SCENARIO_SCHEMA = "parlor.scenario"


@dataclass(frozen=True)
class RoomConfig:
    alpha: float = 0.2
    decay_enabled: bool = True
    depth_cap: int = 10
    event_ceiling: int = 100
    heartbeat_period: int = 40
    dedup_window: int = 60
    dedup_threshold: float = 0.9
    grounding: GroundingConfig = field(default_factory=GroundingConfig)
    bystander_reply_prob: float = 0.0
    master_seed: int = 0
    history_window: int = 20
    # Ticks a talk action holds the agent's lock after emission. The default
    # models synchronous inference (lock released the same tick); raising it
    # lets tests drive the lock/interrupt rules end to end.
    talk_duration: int = 0

    def __post_init__(self):
        if self.depth_cap < 1:
            raise ContractViolation("depth_cap must be >= 1")
        if self.event_ceiling < 1:
            raise ContractViolation("event_ceiling must be >= 1")
        if not 0.0 <= self.bystander_reply_prob <= 1.0:
            raise ContractViolation("bystander_reply_prob must lie in [0, 1]")

    def decay(self) -> DecayConfig:
        return DecayConfig(alpha=self.alpha, enabled=self.decay_enabled)

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "decay_enabled": self.decay_enabled,
            "depth_cap": self.depth_cap,
            "event_ceiling": self.event_ceiling,
            "heartbeat_period": self.heartbeat_period,
            "dedup_window": self.dedup_window,
            "dedup_threshold": self.dedup_threshold,
            "grounding": {
                "fallback_threshold": self.grounding.fallback_threshold,
                "max_pglv": self.grounding.max_pglv,
                "top_k": self.grounding.top_k,
            },
            "bystander_reply_prob": self.bystander_reply_prob,
            "master_seed": self.master_seed,
            "history_window": self.history_window,
            "talk_duration": self.talk_duration,
        }


@dataclass
class TraceRecord:
    """One emitted event plus the decisions that produced it."""

    event: Event
    priority: PriorityClass
    decay_probability: Optional[float] = None
    decay_continued: Optional[bool] = None
    lock: Optional[str] = None
    grounding: dict[str, GroundingMatch] = field(default_factory=dict)
    policy_backend: Optional[str] = None
    superseded_event: Optional[int] = None
    applied_deltas: list[dict[str, Any]] = field(default_factory=list)
    dialogue_suppressed: bool = False

    def to_json_dict(self) -> dict[str, Any]:
        decay = None
        if self.decay_probability is not None:
            decay = {"probability": self.decay_probability, "continued": self.decay_continued}
        return {
            "type": "event",
            "event": self.event.to_json_dict(),
            "priority": self.priority.value,
            "decay": decay,
            "lock": self.lock,
            "grounding": {slot: m.to_json_dict() for slot, m in self.grounding.items()},
            "policy_backend": self.policy_backend,
            "superseded_event": self.superseded_event,
            "applied_deltas": self.applied_deltas,
            "dialogue_suppressed": self.dialogue_suppressed,
        }


class TraceSink:
    """JSONL trace writer; keeps records in memory for same-process analysis."""

    def __init__(self, path: Optional[str | Path] = None, header: Optional[dict] = None):
        self.records: list[dict[str, Any]] = []
        self.header = header or {}
        self._fh = None
        if path is not None:
            try:
                self._fh = Path(path).open("w", encoding="utf-8", newline="\n")
                self._fh.write(json.dumps(self.header, sort_keys=True) + "\n")
            except OSError as exc:
                raise IOFailure(str(exc)) from exc

    def append(self, record: dict[str, Any]) -> None:
        self.records.append(record)
        if self._fh is not None:
            try:
                self._fh.write(json.dumps(record, sort_keys=True) + "\n")
            except OSError as exc:
                raise IOFailure(str(exc)) from exc

    def flush(self) -> None:
        if self._fh is not None:
            try:
                self._fh.flush()
            except OSError as exc:
                raise IOFailure(str(exc)) from exc

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def event_records(self) -> list[dict[str, Any]]:
        return [r for r in self.records if r.get("type") == "event"]


class Room:
    """A live room: shared state plus the single-writer event loop.

    All mutation happens inside `advance_round`; gateway sessions and
    harness drivers only queue inputs and read snapshots.
    """

    def __init__(
        self,
        room_id: str,
        agents: list[AgentState],
        catalog: BundleCatalog,
        config: RoomConfig,
        policy: PolicyBackend,
        embedder: Embedder,
        trace_path: Optional[str | Path] = None,
    ):
        self.room_id = room_id
        self.agents: dict[str, AgentState] = {}
        for agent in agents:
            if agent.agent_id in self.agents:
                raise ValidationError(f"duplicate agent id {agent.agent_id!r}")
            agent.rng_seed = derive_seed(config.master_seed, f"agent:{agent.agent_id}")
            self.agents[agent.agent_id] = agent
        self.catalog = catalog
        self.config = config
        self.policy = policy
        self.embedder = embedder
        self.history: list[Event] = []
        self.logical_clock = 0
        self.trace = TraceSink(
            trace_path,
            header={
                "schema": TRACE_SCHEMA,
                "version": TRACE_VERSION,
                "room_id": room_id,
                "config": config.to_json_dict(),
                "agents": [self._agent_header(a) for a in self.agents.values()],
            },
        )
        self._rngs: dict[str, SplitMix64] = {
            aid: SplitMix64(a.rng_seed) for aid, a in self.agents.items()
        }
        self._room_rng = derive_stream(config.master_seed, "room")
        self._next_event_id = 1
        self._pending_inputs: list[tuple[str, Any]] = []  # ("inject"|"whisper"|"trigger", payload)
        self._pending_stimuli: dict[str, list[Event]] = {aid: [] for aid in self.agents}
        self._recent_dialogue: list[tuple[str, int]] = []
        self._acted_this_round: set[str] = set()
        self._lock_until: dict[str, int] = {}
        self._in_flight_talk: dict[str, int] = {}  # agent id -> in-flight event id
        self.max_source = 0
        self.chain_halted = False
        self.halted = False
        self.safety_fired: Optional[str] = None
        self.chain_stops = 0
        self._subscribers: list[Any] = []  # callables invoked per emitted event

    @staticmethod
    def _agent_header(agent: AgentState) -> dict[str, Any]:
        return {
            "agent_id": agent.agent_id,
            "display_name": agent.display_name,
            "emotion": agent.emotion.value,
            "relationship": dict(agent.relationship),
            "heartbeat_period": agent.heartbeat_period,
            "next_heartbeat": agent.next_heartbeat,
        }

    # ------------------------------------------------------------------
    # Input surface (called from gateway sessions / harness drivers)
    # ------------------------------------------------------------------

    def inject_event(self, event: Event) -> None:
        """Queue a source-0 event for delivery at the start of the next round."""
        if event.source != 0:
            raise ContractViolation("injected events must carry source 0")
        if event.actor not in self.agents:
            raise UnknownAgent(event.actor)
        if event.target is not None and event.target not in self.agents:
            raise UnknownAgent(event.target)
        self._pending_inputs.append(("inject", event))

    def inject_social(
        self, actor: str, target: str, bundle_id: str, dialogue: Optional[str] = None
    ) -> None:
        """Convenience for the harness: force-inject one social interaction."""
        bundle = self.catalog.by_id(bundle_id)
        if bundle is None:
            raise UnknownBundle(bundle_id)
        event = Event(
            event_id=0,  # stamped at delivery
            logical_time=0,
            actor=actor,
            target=target,
            kind=EventKind.INJECTED_SOCIAL,
            source=0,
            bundle_pair=(bundle.id, None),
            dialogue=dialogue,
        )
        self.inject_event(event)

    def submit_whisper(self, w: Whisper) -> None:
        if w.agent_id not in self.agents:
            raise UnknownAgent(w.agent_id)
        if w.target_id is not None and w.target_id not in self.agents:
            raise UnknownAgent(w.target_id)
        self._pending_inputs.append(("whisper", w))

    def submit_trigger(
        self, agent_id: str, bundle_id: str, target_id: Optional[str] = None
    ) -> None:
        if agent_id not in self.agents:
            raise UnknownAgent(agent_id)
        if target_id is not None and target_id not in self.agents:
            raise UnknownAgent(target_id)
        bundle = self.catalog.by_id(bundle_id)
        if bundle is None:
            raise UnknownBundle(bundle_id)
        if bundle.pglv > self.config.grounding.max_pglv:
            raise ValidationError(
                f"bundle {bundle_id!r} exceeds max_pglv {self.config.grounding.max_pglv}"
            )
        self._pending_inputs.append(("trigger", (agent_id, bundle_id, target_id)))

    def subscribe(self, callback) -> None:
        """Register a per-event callback (gateway broadcast hook)."""
        self._subscribers.append(callback)

    def has_pending_b(self) -> bool:
        return any(self._pending_stimuli[aid] for aid in self._pending_stimuli)

    # ------------------------------------------------------------------
    # Round loop
    # ------------------------------------------------------------------

    def advance_round(self) -> list[Event]:
        """Process one logical tick; returns the events emitted this round."""
        if self.halted:
            return []
        self.logical_clock += 1
        now = self.logical_clock
        emitted: list[Event] = []
        self._acted_this_round = set()

        for agent_id in sorted(self._lock_until):
            if self._lock_until[agent_id] <= now:
                converge.release_talk_lock(self.agents[agent_id])
                del self._lock_until[agent_id]
                self._in_flight_talk.pop(agent_id, None)

        # (1) Priority A: player/system inputs, in arrival order.
        inputs, self._pending_inputs = self._pending_inputs, []
        for kind, payload in inputs:
            if kind == "inject":
                emitted.extend(self._deliver_injected(payload))
            elif kind == "whisper":
                emitted.extend(self._process_whisper(payload))
            elif kind == "trigger":
                emitted.extend(self._process_trigger(*payload))

        # (2) Priority B: reply stimuli. Sorted-id iteration; replies emitted
        # mid-round are visible to later slots in the same round.
        if not self.chain_halted:
            for agent_id in sorted(self.agents):
                if agent_id in self._acted_this_round:
                    continue  # busy this round; stimuli stay pending
                pending = self._pending_stimuli[agent_id]
                if not pending:
                    continue
                self._pending_stimuli[agent_id] = []
                emitted.extend(self._process_stimuli(agent_id, pending))

        # (3) Priority C: due heartbeats for idle, unlocked agents.
        for agent_id in sorted(self.agents):
            agent = self.agents[agent_id]
            if agent.next_heartbeat > now:
                continue
            if agent_id in self._acted_this_round or agent.is_talk_locked():
                continue  # deferred; stays due for the next round
            emitted.extend(self._process_heartbeat(agent_id))
            agent.next_heartbeat = now + agent.heartbeat_period

        # (4) End-of-round safety bounds.
        if not self.chain_halted and self.max_source >= self.config.depth_cap:
            self.chain_halted = True
            self.safety_fired = self.safety_fired or "depth_cap"
            self._pending_stimuli = {aid: [] for aid in self.agents}
            self._append_safety("depth_cap")
        if not self.halted and len(self.history) >= self.config.event_ceiling:
            self.halted = True
            self.safety_fired = self.safety_fired or "event_ceiling"
            self._append_safety("event_ceiling")

        self.trace.flush()
        return emitted

    def run(self, ticks: int) -> None:
        for _ in range(ticks):
            self.advance_round()

    # ------------------------------------------------------------------
    # Phase handlers
    # ------------------------------------------------------------------

    def _deliver_injected(self, event: Event) -> list[Event]:
        event.event_id = self._claim_event_id()
        event.logical_time = self.logical_clock
        self._append_event(event, TraceRecord(event=event, priority=classify_priority(event)))
        self._fanout(event)
        return [event]

    def _process_whisper(self, w: Whisper) -> list[Event]:
        try:
            if route_whisper(w) is WhisperRoute.TO_OTHER:
                plan = whisper_to_other(
                    w, self, self.policy, self.embedder, self.config.grounding
                )
            else:
                plan = whisper_to_self(
                    w, self, self.embedder, self.catalog, self.config.grounding
                )
        except PolicyFailure as exc:
            self._append_decision(w.agent_id, "policy_failure", note=str(exc))
            return []
        return [self.execute_planned(w.agent_id, plan)]

    def _process_trigger(
        self, agent_id: str, bundle_id: str, target_id: Optional[str]
    ) -> list[Event]:
        bundle = self.catalog.by_id(bundle_id)
        assert bundle is not None  # validated at submit time
        match = GroundingMatch(bundle=bundle, similarity=1.0, rank=1)
        plan = PlannedBehavior(
            agent_id=agent_id,
            kind=EventKind.TRIGGER,
            source=0,
            priority=PriorityClass.A,
            target_id=target_id,
        )
        if bundle.pool is PoolKind.TALK:
            plan.talk = match
        elif bundle.pool is PoolKind.NON_TALK:
            plan.nontalk = match
        else:
            plan.self_match = match
        return [self.execute_planned(agent_id, plan)]

    def _process_stimuli(self, agent_id: str, pending: list[Event]) -> list[Event]:
        agent = self.agents[agent_id]
        rng = self._rngs[agent_id]
        candidates = [
            StimulusCandidate(event=e, relationship_score=agent.relationship_toward(e.actor))
            for e in pending
        ]
        chosen = converge.select_reply_stimulus(agent, candidates, rng)
        stimulus = chosen.event

        was_locked = agent.is_talk_locked()
        decision = converge.try_acquire_talk_lock(agent, stimulus)
        if decision is LockDecision.REJECTED:
            self._append_decision(
                agent_id, "lock_rejected", stimulus_event=stimulus.event_id
            )
            return []
        lock_label = "interrupt" if was_locked else "accepted"
        superseded = self._in_flight_talk.get(agent_id) if was_locked else None

        probability = converge.reply_probability(stimulus.source, self.config.decay())
        continued = converge.sample_continuation(stimulus.source, self.config.decay(), rng)
        if not continued:
            if not was_locked:
                converge.release_talk_lock(agent)
            self.chain_stops += 1
            self._append_decision(
                agent_id,
                "chain_stop",
                stimulus_event=stimulus.event_id,
                decay={"probability": probability, "continued": False},
            )
            return []

        stimulus_text = self._stimulus_text(stimulus)
        context = build_policy_context(
            self.agents,
            self.history,
            acting_agent_id=agent_id,
            stimulus_text=stimulus_text,
            stimulus_priority=PriorityClass.B,
            target_agent_id=stimulus.actor,
            history_window=self.config.history_window,
        )
        try:
            proposal = self.policy.propose(context)
        except PolicyFailure as exc:
            if not was_locked:
                converge.release_talk_lock(agent)
            self._append_decision(agent_id, "policy_failure", note=str(exc))
            return []
        talk, nontalk = ground_pair(
            proposal.talk_name or "",
            proposal.nontalk_name,
            self.catalog,
            agent.emotion,
            self.embedder,
            self.config.grounding,
        )
        plan = PlannedBehavior(
            agent_id=agent_id,
            kind=EventKind.REPLY,
            source=next_source(stimulus.source),
            priority=PriorityClass.B,
            target_id=stimulus.actor,
            talk=talk,
            nontalk=nontalk,
            dialogue_context=context,
            reply_to=stimulus.event_id,
            policy_backend_id=self.policy.backend_id,
        )
        event = self.execute_planned(
            agent_id, plan, decay=(probability, True), lock=lock_label, superseded=superseded
        )
        return [event]

    def _process_heartbeat(self, agent_id: str) -> list[Event]:
        agent = self.agents[agent_id]
        context = build_policy_context(
            self.agents,
            self.history,
            acting_agent_id=agent_id,
            stimulus_text=HEARTBEAT_STIMULUS,
            stimulus_priority=PriorityClass.C,
            history_window=self.config.history_window,
        )
        try:
            proposal = self.policy.propose(context)
        except PolicyFailure as exc:
            self._append_decision(agent_id, "policy_failure", note=str(exc))
            return []
        if proposal.self_name:
            match = ground_self(
                proposal.self_name,
                self.catalog,
                agent.emotion,
                self.embedder,
                self.config.grounding,
            )
            plan = PlannedBehavior(
                agent_id=agent_id,
                kind=EventKind.SELF_ACTION,
                source=1,
                priority=PriorityClass.C,
                self_match=match,
                policy_backend_id=self.policy.backend_id,
            )
        else:
            talk, nontalk = ground_pair(
                proposal.talk_name or "",
                proposal.nontalk_name,
                self.catalog,
                agent.emotion,
                self.embedder,
                self.config.grounding,
            )
            plan = PlannedBehavior(
                agent_id=agent_id,
                kind=EventKind.AUTONOMOUS_ACTION,
                source=1,
                priority=PriorityClass.C,
                talk=talk,
                nontalk=nontalk,
                dialogue_context=context,
                policy_backend_id=self.policy.backend_id,
            )
        return [self.execute_planned(agent_id, plan)]

    # ------------------------------------------------------------------
    # Execution
    # ------------------------------------------------------------------

    def execute_planned(
        self,
        agent_id: str,
        plan: PlannedBehavior,
        decay: Optional[tuple[float, bool]] = None,
        lock: Optional[str] = None,
        superseded: Optional[int] = None,
    ) -> Event:
        """Apply a grounded plan: deltas, event emission, lock bookkeeping."""
        agent = self.agents[agent_id]
        now = self.logical_clock

        if plan.source == 0 and agent.is_talk_locked() and superseded is None:
            superseded = self._in_flight_talk.get(agent_id)
            lock = lock or "interrupt"

        fell_back = plan.fell_back()
        kind = plan.kind
        if fell_back and plan.source >= 1:
            kind = EventKind.FALLBACK

        dialogue = None
        suppressed = False
        if plan.talk is not None and plan.dialogue_context is not None:
            dialogue = generate_dialogue(
                plan.dialogue_context,
                (plan.talk, plan.nontalk),
                self.policy,
                recent=self._recent_dialogue,
                now=now,
                window=self.config.dedup_window,
                embedder=self.embedder,
                threshold=self.config.dedup_threshold,
            )
            suppressed = dialogue is None

        bundle_pair = None
        if plan.talk is not None or plan.nontalk is not None:
            bundle_pair = (
                plan.talk.bundle.id if plan.talk else plan.nontalk.bundle.id,
                plan.nontalk.bundle.id if (plan.talk and plan.nontalk) else None,
            )
        elif plan.self_match is not None:
            bundle_pair = (plan.self_match.bundle.id, None)

        event = Event(
            event_id=self._claim_event_id(),
            logical_time=now,
            actor=agent_id,
            target=plan.target_id,
            kind=kind,
            source=plan.source,
            bundle_pair=bundle_pair,
            dialogue=dialogue,
            whisper_text=plan.whisper_text,
            reply_to=plan.reply_to,
        )

        applied: list[dict[str, Any]] = []
        if plan.target_id is not None:
            for match in (plan.talk, plan.nontalk):
                if match is not None and match.bundle.relationship_delta:
                    agent.apply_relationship_delta(
                        plan.target_id, match.bundle.relationship_delta
                    )
                    applied.append(
                        {
                            "from": agent_id,
                            "to": plan.target_id,
                            "delta": match.bundle.relationship_delta,
                        }
                    )

        grounding = {}
        if plan.talk is not None:
            grounding["talk"] = plan.talk
        if plan.nontalk is not None:
            grounding["nontalk"] = plan.nontalk
        if plan.self_match is not None:
            grounding["self"] = plan.self_match

        record = TraceRecord(
            event=event,
            priority=classify_priority(event),
            decay_probability=decay[0] if decay else None,
            decay_continued=decay[1] if decay else None,
            lock=lock,
            grounding=grounding,
            policy_backend=plan.policy_backend_id,
            superseded_event=superseded,
            applied_deltas=applied,
            dialogue_suppressed=suppressed,
        )
        self._append_event(event, record)

        if dialogue is not None:
            self._recent_dialogue.append((dialogue, now))

        # Lock bookkeeping: a talk action holds the lock for talk_duration
        # ticks after emission; zero means released on the same tick.
        if plan.talk is not None:
            agent.talk_state |= 1
            if self.config.talk_duration > 0:
                self._lock_until[agent_id] = now + self.config.talk_duration
                self._in_flight_talk[agent_id] = event.event_id
            else:
                converge.release_talk_lock(agent)
                self._lock_until.pop(agent_id, None)
                self._in_flight_talk.pop(agent_id, None)
        elif superseded is not None:
            # Source-0 interrupt replaced an in-flight talk with a non-talk
            # action; the old lock is cancelled with it.
            converge.release_talk_lock(agent)
            self._lock_until.pop(agent_id, None)
            self._in_flight_talk.pop(agent_id, None)

        self._acted_this_round.add(agent_id)
        self._fanout(event)
        return event

    # ------------------------------------------------------------------
    # Internals
    # ------------------------------------------------------------------

    def _claim_event_id(self) -> int:
        eid = self._next_event_id
        self._next_event_id += 1
        return eid

    def _stimulus_text(self, stimulus: Event) -> str:
        if stimulus.bundle_pair:
            bundle = self.catalog.by_id(stimulus.bundle_pair[0])
            if bundle is not None:
                return bundle.name
        return stimulus.dialogue or ""

    def _append_event(self, event: Event, record: TraceRecord) -> None:
        self.history.append(event)
        if event.source >= 2:
            self.max_source = max(self.max_source, event.source)
        self.trace.append(record.to_json_dict())
        for callback in self._subscribers:
            callback(event)

    def _append_decision(self, agent_id: str, decision: str, **extra: Any) -> None:
        record: dict[str, Any] = {
            "type": "decision",
            "logical_time": self.logical_clock,
            "agent": agent_id,
            "decision": decision,
        }
        record.update(extra)
        self.trace.append(record)

    def _append_safety(self, bound: str) -> None:
        self.trace.append(
            {
                "type": "safety",
                "logical_time": self.logical_clock,
                "bound": bound,
                "max_source": self.max_source,
                "n_events": len(self.history),
            }
        )

    def _fanout(self, event: Event) -> None:
        """Turn a broadcast event into priority-B stimuli for other agents."""
        if self.chain_halted:
            return
        social = event.kind in (
            EventKind.INJECTED_SOCIAL,
            EventKind.REPLY,
            EventKind.WHISPER,
            EventKind.TRIGGER,
            EventKind.AUTONOMOUS_ACTION,
            EventKind.FALLBACK,
        )
        if not social:
            return
        if event.target is not None and event.target != event.actor:
            self._pending_stimuli[event.target].append(event)
        if self.config.bystander_reply_prob > 0.0:
            for agent_id in sorted(self.agents):
                if agent_id in (event.actor, event.target):
                    continue
                if self._rngs[agent_id].bernoulli(self.config.bystander_reply_prob):
                    self._pending_stimuli[agent_id].append(event)

    # ------------------------------------------------------------------
    # Snapshots and replay support
    # ------------------------------------------------------------------

    def snapshot(self) -> dict[str, Any]:
        return {
            "room_id": self.room_id,
            "logical_clock": self.logical_clock,
            "agents": {
                aid: {
                    "display_name": a.display_name,
                    "emotion": a.emotion.value,
                    "relationship": {k: a.relationship[k] for k in sorted(a.relationship)},
                    "talk_locked": a.is_talk_locked(),
                }
                for aid, a in sorted(self.agents.items())
            },
            "recent_events": [
                e.to_json_dict() for e in self.history[-self.config.history_window :]
            ],
        }

    def summary(self) -> dict[str, Any]:
        """Final-state digest compared against trace replay."""
        return {
            "room_id": self.room_id,
            "logical_clock": self.logical_clock,
            "n_events": len(self.history),
            "last_event_id": self.history[-1].event_id if self.history else 0,
            "max_source": self.max_source,
            "relationship": {
                aid: {k: a.relationship[k] for k in sorted(a.relationship)}
                for aid, a in sorted(self.agents.items())
            },
        }


def replay_trace(path: str | Path) -> dict[str, Any]:
    """Re-derive the final room summary from a persisted trace file."""
    path = Path(path)
    header: Optional[dict[str, Any]] = None
    relationship: dict[str, dict[str, int]] = {}
    clock = 0
    n_events = 0
    last_event_id = 0
    max_source = 0
    with path.open("r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ReplayError(line_number, f"invalid JSON: {exc}") from exc
            if header is None:
                if obj.get("schema") != TRACE_SCHEMA:
                    raise ReplayError(line_number, "missing trace header")
                header = obj
                for agent in obj.get("agents", []):
                    relationship[agent["agent_id"]] = dict(agent.get("relationship", {}))
                continue
            if obj.get("type") != "event":
                continue
            try:
                event = Event.from_json_dict(obj["event"])
            except (KeyError, ValueError, ContractViolation) as exc:
                raise ReplayError(line_number, f"bad event record: {exc}") from exc
            if event.logical_time < clock:
                raise ReplayError(line_number, "logical clock went backwards")
            clock = max(clock, event.logical_time)
            n_events += 1
            last_event_id = event.event_id
            if event.source >= 2:
                max_source = max(max_source, event.source)
            for delta in obj.get("applied_deltas", []):
                scores = relationship.setdefault(delta["from"], {})
                scores[delta["to"]] = scores.get(delta["to"], 0) + delta["delta"]
    if header is None:
        raise ReplayError(0, "empty trace file")
    return {
        "room_id": header["room_id"],
        "logical_clock": clock,
        "n_events": n_events,
        "last_event_id": last_event_id,
        "max_source": max_source,
        "relationship": {
            aid: {k: scores[k] for k in sorted(scores)}
            for aid, scores in sorted(relationship.items())
        },
    }


# ----------------------------------------------------------------------
# Scenario files: shared setup for trials and the live panel.
# ----------------------------------------------------------------------


@dataclass
class Scenario:
    room_id: str
    agents: list[AgentState]
    owners: dict[str, str]  # agent id -> owning player id ("harness" = driver-owned)
    config_overrides: dict[str, Any] = field(default_factory=dict)

    def build_config(self, base: Optional[RoomConfig] = None, **extra: Any) -> RoomConfig:
        values = (base or RoomConfig()).to_json_dict()
        grounding = values.pop("grounding")
        for overrides in (self.config_overrides, extra):
            overrides = dict(overrides)
            grounding.update(overrides.pop("grounding", {}))
            values.update(overrides)
        return RoomConfig(grounding=GroundingConfig(**grounding), **values)


def load_scenario(path: str | Path) -> Scenario:
    """Load a JSONL scenario: header line, then one agent object per line."""
    path = Path(path)
    header: Optional[dict[str, Any]] = None
    agents: list[AgentState] = []
    owners: dict[str, str] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"line {line_number}: invalid JSON: {exc}") from exc
            if header is None:
                if obj.get("schema") != SCENARIO_SCHEMA:
                    raise ParseError("first line must be the scenario header")
                header = obj
                continue
            period = int(obj.get("heartbeat_period", 40))
            offset = int(obj.get("heartbeat_offset", 0))
            agent = AgentState(
                agent_id=str(obj["agent_id"]),
                display_name=str(obj.get("display_name", obj["agent_id"])),
                emotion=EmotionState(obj.get("emotion", "neutral")),
                relationship={str(k): int(v) for k, v in obj.get("relationship", {}).items()},
                heartbeat_period=period,
                next_heartbeat=period + offset,
                persona=str(obj.get("persona", "")),
            )
            agents.append(agent)
            owners[agent.agent_id] = str(obj.get("player_id", "harness"))
    if header is None:
        raise ParseError("empty scenario file")
    return Scenario(
        room_id=str(header.get("room_id", "room")),
        agents=agents,
        owners=owners,
        config_overrides=dict(header.get("config", {})),
    )
