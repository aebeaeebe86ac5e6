import pytest

from parlor.converge import (
    DecayConfig,
    LockDecision,
    StimulusCandidate,
    is_duplicate_dialogue,
    max_chain_depth,
    reply_probability,
    sample_continuation,
    select_reply_stimulus,
    try_acquire_talk_lock,
)
from parlor.errors import EmptyCandidates
from parlor.model import AgentState, Event, EventKind
from parlor.rng import SplitMix64

ALPHA = DecayConfig(alpha=0.2, enabled=True)


def _stim(actor, source=2, event_id=1):
    kind = EventKind.REPLY if source >= 2 else EventKind.INJECTED_SOCIAL
    event = Event(
        event_id=event_id, logical_time=0, actor=actor, target="X", kind=kind, source=source
    )
    return event


class TestReplyProbability:
    def test_deployed_schedule_exact(self):
        expected = {1: 1.0, 2: 0.8, 3: 0.6, 4: 0.4, 5: 0.2, 6: 0.0}
        for s, p in expected.items():
            assert reply_probability(s, ALPHA) == pytest.approx(p, abs=1e-12)

    def test_zero_at_six_and_beyond(self):
        for s in range(6, 20):
            assert reply_probability(s, ALPHA) == 0.0

    def test_upper_clamp_at_source_zero(self):
        # The raw linear form gives 1.2 here; probabilities stay in [0, 1].
        assert reply_probability(0, ALPHA) == 1.0

    def test_disabled_is_always_one(self):
        off = DecayConfig(alpha=0.2, enabled=False)
        assert all(reply_probability(s, off) == 1.0 for s in range(0, 50))

    def test_zero_alpha_is_always_one(self):
        flat = DecayConfig(alpha=0.0, enabled=True)
        assert reply_probability(3, flat) == 1.0

    def test_monotone_in_source(self):
        for alpha in (0.05, 0.2, 0.5, 1.0):
            cfg = DecayConfig(alpha=alpha, enabled=True)
            probs = [reply_probability(s, cfg) for s in range(1, 30)]
            assert all(a >= b for a, b in zip(probs, probs[1:]))

    def test_monotone_in_alpha(self):
        for s in range(2, 12):
            probs = [
                reply_probability(s, DecayConfig(alpha=a, enabled=True))
                for a in (0.0, 0.1, 0.2, 0.4, 0.8)
            ]
            assert all(a >= b for a, b in zip(probs, probs[1:]))

    def test_hard_depth_bound_value(self):
        assert max_chain_depth(ALPHA) == 6


class TestSampleContinuation:
    def test_zero_probability_never_continues(self):
        for seed in range(50):
            assert not sample_continuation(6, ALPHA, SplitMix64(seed))

    def test_certain_probability_always_continues(self):
        for seed in range(50):
            assert sample_continuation(1, ALPHA, SplitMix64(seed))

    def test_seed_42_regression(self):
        # Pinned once from a reference run; guards the RNG stream layout.
        assert sample_continuation(3, ALPHA, SplitMix64(42)) is False

    def test_consumes_exactly_one_draw(self):
        rng = SplitMix64(9)
        sample_continuation(1, ALPHA, rng)
        shadow = SplitMix64(9)
        shadow.random()
        assert rng.next_u64() == shadow.next_u64()


class TestSelectReplyStimulus:
    def _agent(self):
        return AgentState(agent_id="X", display_name="X")

    def test_highest_relationship_wins(self):
        candidates = [
            StimulusCandidate(event=_stim("B"), relationship_score=5),
            StimulusCandidate(event=_stim("C", event_id=2), relationship_score=2),
        ]
        pick = select_reply_stimulus(self._agent(), candidates, SplitMix64(0))
        assert pick.event.actor == "B"

    def test_single_candidate(self):
        only = StimulusCandidate(event=_stim("B"), relationship_score=0)
        assert select_reply_stimulus(self._agent(), [only], SplitMix64(0)) is only

    def test_empty_candidates(self):
        with pytest.raises(EmptyCandidates):
            select_reply_stimulus(self._agent(), [], SplitMix64(0))

    def test_tie_break_deterministic_and_uniform(self):
        candidates = [
            StimulusCandidate(event=_stim("B"), relationship_score=3),
            StimulusCandidate(event=_stim("C", event_id=2), relationship_score=3),
        ]
        first = select_reply_stimulus(self._agent(), candidates, SplitMix64(7))
        again = select_reply_stimulus(self._agent(), candidates, SplitMix64(7))
        assert first is again

        counts = {"B": 0, "C": 0}
        for seed in range(10_000):
            pick = select_reply_stimulus(self._agent(), candidates, SplitMix64(seed))
            counts[pick.event.actor] += 1
        assert abs(counts["B"] / 10_000 - 0.5) < 0.02

    def test_unique_max_consumes_no_draw(self):
        candidates = [
            StimulusCandidate(event=_stim("B"), relationship_score=4),
            StimulusCandidate(event=_stim("C", event_id=2), relationship_score=1),
        ]
        rng = SplitMix64(3)
        select_reply_stimulus(self._agent(), candidates, rng)
        assert rng.next_u64() == SplitMix64(3).next_u64()


class TestTalkLock:
    def test_unlocked_accepts_reply(self):
        agent = AgentState(agent_id="X", display_name="X")
        assert try_acquire_talk_lock(agent, _stim("B", source=2)) is LockDecision.ACCEPTED
        assert agent.is_talk_locked()

    def test_locked_rejects_reply(self):
        agent = AgentState(agent_id="X", display_name="X", talk_state=1)
        assert try_acquire_talk_lock(agent, _stim("B", source=2)) is LockDecision.REJECTED
        assert agent.is_talk_locked()

    def test_locked_accepts_source_zero_interrupt(self):
        agent = AgentState(agent_id="X", display_name="X", talk_state=1)
        whisper_like = Event(
            event_id=9, logical_time=0, actor="P", target="X", kind=EventKind.WHISPER, source=0
        )
        assert try_acquire_talk_lock(agent, whisper_like) is LockDecision.ACCEPTED


class TestDedup:
    def test_identical_string_within_window(self, embedder):
        recent = [("hello there", 10)]
        assert is_duplicate_dialogue("hello there", recent, 30, 60, embedder, 0.9)

    def test_identical_string_outside_window(self, embedder):
        recent = [("hello there", 10)]
        assert not is_duplicate_dialogue("hello there", recent, 100, 60, embedder, 0.9)

    def test_fixture_paraphrase_pair(self, embedder):
        # Designed pair with hand-computed cosine 0.8*0.6 + 0.6*0.8 = 0.96.
        recent = [("That was a brilliant move, truly.", 5)]
        assert is_duplicate_dialogue(
            "Truly, that move was brilliant.", recent, 10, 60, embedder, 0.9
        )
        assert not is_duplicate_dialogue(
            "Truly, that move was brilliant.", recent, 10, 60, embedder, 0.97
        )

    def test_unrelated_text_not_duplicate(self, embedder):
        recent = [("completely unrelated sentence", 5)]
        assert not is_duplicate_dialogue(
            "another thing entirely, honestly", recent, 10, 60, embedder, 0.9
        )
