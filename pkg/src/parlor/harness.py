"""Desk-scale evaluation harness: decay trials, grounding and whisper benches.

The decay trials follow the controlled design: five characters in a party
room, one force-injected source-0 social interaction, decay on vs off,
N independent seeded trials per condition. Safety bounds (depth cap 10,
event ceiling 100) are backstops, not intended stopping criteria.

Natural termination means the chain ended because a continuation draw
failed, before any safety bound fired. Autonomy share is measured over a
fixed 600-tick horizon (15 heartbeats per agent) so both conditions are
compared on the same window; where that window starts and ends is a harness
definition, recorded in the report header, and the absolute share values
depend on it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from scipy.stats import binomtest

from .errors import ContractViolation, EmptyTrace, ParseError, UnknownBundle, ValidationError
from .ground import (
    Embedder,
    GroundingConfig,
    filter_candidates,
    ground_pair,
    ground_self,
    retrieve,
)
from .model import BundleCatalog, EmotionState, Event, PoolKind
from .policy import MockPolicy, PolicyBackend
from .rng import derive_seed
from .runtime import Room, RoomConfig, Scenario
from .whisper import Whisper

# One-factor-at-a-time robustness setups: actor, target, trigger bundle.
SETUPS: dict[str, tuple[str, str, str]] = {
    "baseline": ("A", "B", "t_debate"),
    "s1": ("B", "C", "t_debate"),
    "s2": ("C", "D", "t_debate"),
    "s3": ("E", "A", "t_debate"),
    "s4": ("A", "B", "t_discuss"),
}

DEFAULT_HORIZON = 600  # ticks; 15 heartbeats per agent at period 40


@dataclass(frozen=True)
class TrialConfig:
    setup: str = "baseline"
    decay_enabled: bool = True
    alpha: float = 0.2
    n_trials: int = 20
    master_seed: int = 0
    horizon: Optional[int] = DEFAULT_HORIZON  # None = stop when the chain ends
    trigger_bundle: Optional[str] = None  # overrides the setup's trigger
    room_overrides: dict[str, Any] = field(default_factory=dict)

    def pair(self) -> tuple[str, str, str]:
        if self.setup not in SETUPS:
            raise ContractViolation(f"unknown setup {self.setup!r}")
        actor, target, trigger = SETUPS[self.setup]
        return actor, target, self.trigger_bundle or trigger


@dataclass
class TrialMetrics:
    max_depth: int
    termination: str  # "natural" | "depth_cap" | "event_ceiling"
    autonomy_share: float
    events_by_source: dict[int, int]
    n_events: int

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "max_depth": self.max_depth,
            "termination": self.termination,
            "autonomy_share": self.autonomy_share,
            "events_by_source": {str(k): v for k, v in sorted(self.events_by_source.items())},
            "n_events": self.n_events,
        }


def compute_autonomy_share(events: list[Event]) -> float:
    """Fraction of events that are self-initiated (source = 1)."""
    if not events:
        raise EmptyTrace("autonomy share undefined over an empty trace")
    autonomous = sum(1 for e in events if e.source == 1)
    return autonomous / len(events)


def depth_distribution_oracle(alpha: float, depth_cap: int = 10) -> dict[int, float]:
    """Terminal max-source distribution of a single pairwise chain.

    The injected (source 0) stimulus always propagates, so the chain starts
    at depth 2; it reaches depth d by surviving the continuation draws at
    sources 2..d-1 and failing the draw at d. Depth `depth_cap` absorbs all
    remaining survival mass (the safety bound).
    """
    if alpha < 0:
        raise ContractViolation("alpha must be >= 0")

    def p_reply(s: int) -> float:
        return min(1.0, max(0.0, 1.0 - (s - 1) * alpha))

    dist: dict[int, float] = {}
    survive = 1.0
    for depth in range(2, depth_cap):
        p_fail = 1.0 - p_reply(depth)
        if p_fail > 0.0:
            dist[depth] = survive * p_fail
        survive *= p_reply(depth)
        if survive == 0.0:
            break
    if survive > 0.0:
        dist[depth_cap] = survive
    return dist


def oracle_mean_depth(alpha: float, depth_cap: int = 10) -> float:
    dist = depth_distribution_oracle(alpha, depth_cap)
    return sum(d * p for d, p in dist.items())


def build_trial_room(
    scenario: Scenario,
    catalog: BundleCatalog,
    policy: PolicyBackend,
    embedder: Embedder,
    config: TrialConfig,
    seed: int,
    trace_path: Optional[str | Path] = None,
) -> Room:
    room_config = scenario.build_config(
        alpha=config.alpha,
        decay_enabled=config.decay_enabled,
        master_seed=seed,
        **config.room_overrides,
    )
    agents = [
        # Fresh copies so repeated trials never share mutable state.
        type(a)(
            agent_id=a.agent_id,
            display_name=a.display_name,
            emotion=a.emotion,
            relationship=dict(a.relationship),
            heartbeat_period=a.heartbeat_period,
            next_heartbeat=a.next_heartbeat,
            persona=a.persona,
        )
        for a in scenario.agents
    ]
    return Room(
        room_id=scenario.room_id,
        agents=agents,
        catalog=catalog,
        config=room_config,
        policy=policy,
        embedder=embedder,
        trace_path=trace_path,
    )


def run_trial(
    scenario: Scenario,
    catalog: BundleCatalog,
    policy: PolicyBackend,
    embedder: Embedder,
    config: TrialConfig,
    seed: int,
    trace_path: Optional[str | Path] = None,
) -> TrialMetrics:
    """One trial: inject the trigger, advance to the horizon, score the trace."""
    actor, target, trigger = config.pair()
    room = build_trial_room(scenario, catalog, policy, embedder, config, seed, trace_path)
    if room.catalog.by_id(trigger) is None:
        raise UnknownBundle(trigger)
    room.inject_social(actor, target, trigger)

    if config.horizon is None:
        # Chain-only mode: stop as soon as the chain has resolved.
        for _ in range(10 * room.config.depth_cap + 10):
            room.advance_round()
            if room.safety_fired or (room.chain_stops > 0 and not room.has_pending_b()):
                break
    else:
        room.run(config.horizon)

    if room.safety_fired == "depth_cap":
        termination = "depth_cap"
    elif room.safety_fired == "event_ceiling":
        termination = "event_ceiling"
    elif room.chain_stops > 0 and not room.has_pending_b():
        termination = "natural"
    else:
        raise ContractViolation("trial horizon elapsed with the chain still live")

    histogram: dict[int, int] = {}
    for e in room.history:
        histogram[e.source] = histogram.get(e.source, 0) + 1
    room.trace.close()
    return TrialMetrics(
        max_depth=room.max_source,
        termination=termination,
        autonomy_share=compute_autonomy_share(room.history),
        events_by_source=histogram,
        n_events=len(room.history),
    )


def _mean(xs: list[float]) -> float:
    return sum(xs) / len(xs)


def _sd(xs: list[float]) -> float:
    if len(xs) < 2:
        return 0.0
    m = _mean(xs)
    return (sum((x - m) ** 2 for x in xs) / (len(xs) - 1)) ** 0.5


def run_trial_batch(
    scenario: Scenario,
    catalog: BundleCatalog,
    policy: PolicyBackend,
    embedder: Embedder,
    setup: str = "baseline",
    n_trials: int = 20,
    master_seed: int = 0,
    alpha: float = 0.2,
    horizon: Optional[int] = DEFAULT_HORIZON,
    conditions: tuple[str, ...] = ("on", "off"),
    room_overrides: Optional[dict[str, Any]] = None,
) -> dict[str, Any]:
    """Run both decay conditions for one setup and summarize like the
    published comparison tables."""
    report: dict[str, Any] = {
        "setup": setup,
        "n_trials": n_trials,
        "alpha": alpha,
        "horizon": horizon,
        "master_seed": master_seed,
        "share_window": "all trace events from injection to the fixed horizon",
        "conditions": {},
    }
    for condition in conditions:
        config = TrialConfig(
            setup=setup,
            decay_enabled=(condition == "on"),
            alpha=alpha,
            n_trials=n_trials,
            master_seed=master_seed,
            horizon=horizon,
            room_overrides=dict(room_overrides or {}),
        )
        metrics = []
        for i in range(n_trials):
            seed = derive_seed(master_seed, f"trial:{setup}:{condition}:{i}")
            metrics.append(run_trial(scenario, catalog, policy, embedder, config, seed))
        depths = [float(m.max_depth) for m in metrics]
        shares = [m.autonomy_share for m in metrics]
        natural = sum(1 for m in metrics if m.termination == "natural")
        capped = sum(1 for m in metrics if m.termination == "depth_cap")
        report["conditions"][condition] = {
            "depth_mean": _mean(depths),
            "depth_sd": _sd(depths),
            "depth_range": [min(depths), max(depths)],
            "natural": natural,
            "depth_cap": capped,
            "event_ceiling": n_trials - natural - capped,
            "autonomy_share_mean": _mean(shares),
            "autonomy_share_range": [min(shares), max(shares)],
            "trials": [m.to_json_dict() for m in metrics],
        }
        # Two-sided exact test against a 50/50 termination split.
        report["conditions"][condition]["binomial_p"] = float(
            binomtest(natural, n_trials, 0.5).pvalue
        )
    return report


def empirical_depth_distribution(
    scenario: Scenario,
    catalog: BundleCatalog,
    policy: PolicyBackend,
    embedder: Embedder,
    n_trials: int = 10_000,
    alpha: float = 0.2,
    master_seed: int = 0,
    setup: str = "baseline",
) -> dict[int, float]:
    """Terminal-depth frequencies over seeded single-chain trials."""
    config = TrialConfig(setup=setup, decay_enabled=True, alpha=alpha, horizon=None)
    counts: dict[int, int] = {}
    for i in range(n_trials):
        seed = derive_seed(master_seed, f"chain:{i}")
        m = run_trial(scenario, catalog, policy, embedder, config, seed)
        counts[m.max_depth] = counts.get(m.max_depth, 0) + 1
    return {d: c / n_trials for d, c in sorted(counts.items())}


def total_variation(p: dict[int, float], q: dict[int, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


# ---------------------------------------------------------------------------
# Grounding probe benchmark
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeCase:
    probe_id: str
    pool: PoolKind
    intent: str
    expected: Optional[str]
    expect_fallback: bool
    difficulty: str

    DIFFICULTIES = ("paraphrase", "indirect", "adjacent", "out_of_scope")


def load_probes(path: str | Path) -> list[ProbeCase]:
    probes = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"line {line_number}: invalid JSON: {exc}") from exc
            difficulty = str(obj["difficulty"])
            if difficulty not in ProbeCase.DIFFICULTIES:
                raise ValidationError(f"line {line_number}: bad difficulty {difficulty!r}")
            probes.append(
                ProbeCase(
                    probe_id=str(obj["probe_id"]),
                    pool=PoolKind(obj["pool"]),
                    intent=str(obj["intent"]),
                    expected=obj.get("expected"),
                    expect_fallback=bool(obj.get("expect_fallback", False)),
                    difficulty=difficulty,
                )
            )
    return probes


def run_grounding_benchmark(
    probes: list[ProbeCase],
    embedder: Embedder,
    catalog: BundleCatalog,
    config: GroundingConfig,
    emotion: EmotionState = EmotionState.NEUTRAL,
) -> dict[str, Any]:
    """Top-1/top-3 accuracy per pool; expected-fallback probes count as
    correct when the threshold routes them to the safe default."""
    by_pool: dict[str, list[dict[str, Any]]] = {}
    for probe in probes:
        pool = catalog.pool(probe.pool)
        if probe.expected is not None:
            expected_bundle = catalog.by_id(probe.expected)
            if expected_bundle is None or expected_bundle.pool is not probe.pool:
                raise UnknownBundle(f"{probe.probe_id}: {probe.expected}")
        candidates = filter_candidates(pool, emotion, config)
        matches = retrieve(probe.intent, candidates, embedder, config.top_k)
        top = matches[0]
        fell_back = top.similarity < config.fallback_threshold
        if probe.expect_fallback:
            top1_correct = fell_back
            top3_correct = fell_back
        else:
            top1_correct = (not fell_back) and top.bundle.id == probe.expected
            top3_correct = (not fell_back) and any(
                m.bundle.id == probe.expected for m in matches
            )
        by_pool.setdefault(probe.pool.value, []).append(
            {
                "probe_id": probe.probe_id,
                "intent": probe.intent,
                "difficulty": probe.difficulty,
                "expected": probe.expected,
                "expect_fallback": probe.expect_fallback,
                "fell_back": fell_back,
                "matches": [m.to_json_dict() for m in matches],
                "top1_correct": top1_correct,
                "top3_correct": top3_correct,
            }
        )

    report: dict[str, Any] = {
        "embedder": embedder.model_id,
        "max_pglv": config.max_pglv,
        "fallback_threshold": config.fallback_threshold,
        "pools": {},
    }
    for pool_value, cases in sorted(by_pool.items()):
        n = len(cases)
        top1 = sum(1 for c in cases if c["top1_correct"])
        top3 = sum(1 for c in cases if c["top3_correct"])
        kind = PoolKind(pool_value)
        pool_size = len(catalog.pool(kind))
        filtered_size = len(filter_candidates(catalog.pool(kind), emotion, config))
        report["pools"][pool_value] = {
            "n": n,
            "top1_accuracy": top1 / n,
            "top3_accuracy": top3 / n,
            "mean_top1_similarity": _mean([c["matches"][0]["similarity"] for c in cases]),
            "pool_size": pool_size,
            "candidate_pool_size": filtered_size,
            "confusions": [
                {
                    "probe_id": c["probe_id"],
                    "intent": c["intent"],
                    "expected": c["expected"],
                    "got": c["matches"][0]["bundle_id"],
                    "similarity": c["matches"][0]["similarity"],
                }
                for c in cases
                if not c["top1_correct"] and not c["expect_fallback"]
            ],
            "cases": cases,
        }
    return report


# ---------------------------------------------------------------------------
# Whisper benchmark
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WhisperCase:
    case_id: str
    condition: str  # "to_other" | "to_self"
    agent_id: str
    target_id: Optional[str]
    whisper: str
    annotation: str  # "success" | "partial" | "failure"
    failure_mode: Optional[str]
    expected_direction: Optional[str] = None
    expected_talk_bundle: Optional[str] = None
    expect_fallback: bool = False

    FAILURE_MODES = (
        "talk_misalignment",
        "action_misalignment",
        "over_softened",
        "unclear_whisper",
        "semantic_drift",
    )


@dataclass(frozen=True)
class CrossPair:
    pair_id: str
    agent_id: str
    target_id: str
    whisper_a: str
    expected_talk_a: str
    whisper_b: str
    expected_talk_b: str


def load_whisper_cases(path: str | Path) -> tuple[list[WhisperCase], list[CrossPair]]:
    cases: list[WhisperCase] = []
    pairs: list[CrossPair] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"line {line_number}: invalid JSON: {exc}") from exc
            if obj.get("type") == "cross_pair":
                pairs.append(
                    CrossPair(
                        pair_id=str(obj["pair_id"]),
                        agent_id=str(obj["agent_id"]),
                        target_id=str(obj["target_id"]),
                        whisper_a=str(obj["whisper_a"]),
                        expected_talk_a=str(obj["expected_talk_a"]),
                        whisper_b=str(obj["whisper_b"]),
                        expected_talk_b=str(obj["expected_talk_b"]),
                    )
                )
                continue
            mode = obj.get("failure_mode")
            if mode is not None and mode not in WhisperCase.FAILURE_MODES:
                raise ValidationError(f"line {line_number}: bad failure mode {mode!r}")
            cases.append(
                WhisperCase(
                    case_id=str(obj["case_id"]),
                    condition=str(obj["condition"]),
                    agent_id=str(obj["agent_id"]),
                    target_id=obj.get("target_id"),
                    whisper=str(obj["whisper"]),
                    annotation=str(obj["annotation"]),
                    failure_mode=mode,
                    expected_direction=obj.get("expected_direction"),
                    expected_talk_bundle=obj.get("expected_talk_bundle"),
                    expect_fallback=bool(obj.get("expect_fallback", False)),
                )
            )
    return cases, pairs


def _fresh_room(
    scenario: Scenario,
    catalog: BundleCatalog,
    policy: PolicyBackend,
    embedder: Embedder,
    master_seed: int,
) -> Room:
    config = TrialConfig(master_seed=master_seed)
    return build_trial_room(scenario, catalog, policy, embedder, config, master_seed)


def _run_whisper(room: Room, case_agent: str, target: Optional[str], text: str) -> Event:
    w = Whisper(
        player_id="bench",
        agent_id=case_agent,
        target_id=target,
        text=text,
        logical_time=room.logical_clock,
    )
    room.submit_whisper(w)
    emitted = room.advance_round()
    whisper_events = [e for e in emitted if e.whisper_text == text]
    if not whisper_events:
        raise ContractViolation(f"whisper produced no event: {text!r}")
    return whisper_events[0]


def run_whisper_benchmark(
    cases: list[WhisperCase],
    pairs: list[CrossPair],
    scenario: Scenario,
    catalog: BundleCatalog,
    policy: PolicyBackend,
    embedder: Embedder,
    master_seed: int = 0,
) -> dict[str, Any]:
    """Run every case through the full room pipeline under a fixed context,
    join the annotation labels, and run the cross-whisper flip check."""
    results = []
    for case in cases:
        room = _fresh_room(scenario, catalog, policy, embedder, master_seed)
        event = _run_whisper(room, case.agent_id, case.target_id, case.whisper)
        record = next(
            r for r in room.trace.event_records()
            if r["event"]["event_id"] == event.event_id
        )
        grounding = record["grounding"]
        fell_back = any(m["fell_back"] for m in grounding.values())
        talk_bundle = grounding.get("talk", {}).get("bundle_id")
        self_bundle = grounding.get("self", {}).get("bundle_id")
        matches_expectation = True
        if case.expected_talk_bundle is not None:
            matches_expectation = talk_bundle == case.expected_talk_bundle
        if case.expect_fallback:
            matches_expectation = fell_back
        results.append(
            {
                "case_id": case.case_id,
                "condition": case.condition,
                "whisper": case.whisper,
                "talk_bundle": talk_bundle,
                "self_bundle": self_bundle,
                "bundle_pair": record["event"]["bundle_pair"],
                "dialogue": record["event"]["dialogue"],
                "fell_back": fell_back,
                "matches_expectation": matches_expectation,
                "annotation": case.annotation,
                "failure_mode": case.failure_mode,
            }
        )

    report: dict[str, Any] = {"cases": results, "conditions": {}}
    for condition in ("to_other", "to_self"):
        rows = [r for r in results if r["condition"] == condition]
        if not rows:
            continue
        aligned = sum(1 for r in rows if r["annotation"] in ("success", "partial"))
        report["conditions"][condition] = {
            "n": len(rows),
            "success": sum(1 for r in rows if r["annotation"] == "success"),
            "partial": sum(1 for r in rows if r["annotation"] == "partial"),
            "failure": sum(1 for r in rows if r["annotation"] == "failure"),
            "aligned_rate": aligned / len(rows),
            "failure_modes": sorted(
                {r["failure_mode"] for r in rows if r["failure_mode"]}
            ),
        }
    total_aligned = sum(1 for r in results if r["annotation"] in ("success", "partial"))
    report["overall_aligned_rate"] = total_aligned / len(results) if results else 0.0

    flips = []
    for pair in pairs:
        room_a = _fresh_room(scenario, catalog, policy, embedder, master_seed)
        event_a = _run_whisper(room_a, pair.agent_id, pair.target_id, pair.whisper_a)
        room_b = _fresh_room(scenario, catalog, policy, embedder, master_seed)
        event_b = _run_whisper(room_b, pair.agent_id, pair.target_id, pair.whisper_b)
        talk_a = event_a.bundle_pair[0] if event_a.bundle_pair else None
        talk_b = event_b.bundle_pair[0] if event_b.bundle_pair else None
        flips.append(
            {
                "pair_id": pair.pair_id,
                "talk_a": talk_a,
                "talk_b": talk_b,
                "flipped": talk_a == pair.expected_talk_a
                and talk_b == pair.expected_talk_b
                and talk_a != talk_b,
            }
        )
    report["cross_whisper"] = {
        "pairs": flips,
        "flipped": sum(1 for f in flips if f["flipped"]),
        "n": len(flips),
    }
    return report
