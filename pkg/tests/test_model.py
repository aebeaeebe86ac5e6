import json

import pytest

from parlor.errors import ContractViolation, ParseError, ValidationError
from parlor.model import (
    BehaviorBundle,
    Event,
    EventKind,
    PoolKind,
    PriorityClass,
    classify_priority,
    load_catalog,
    next_source,
    save_catalog,
    validate_catalog,
)


def _bundle(bid, pool, **kw):
    defaults = dict(name=bid, pool=pool, pglv=1)
    defaults.update(kw)
    return BehaviorBundle(id=bid, **defaults)


def _minimal_bundles():
    return [
        _bundle("t1", PoolKind.TALK, is_safe_default=True),
        _bundle("n1", PoolKind.NON_TALK, is_safe_default=True),
        _bundle("s1", PoolKind.TO_SELF, is_safe_default=True),
    ]


class TestCatalog:
    def test_sample_catalog_pool_counts(self, catalog):
        counts = catalog.pool_counts()
        assert counts[PoolKind.TALK] == 12
        assert counts[PoolKind.NON_TALK] == 8
        assert counts[PoolKind.TO_SELF] == 6

    def test_missing_self_safe_default_names_pool(self):
        bundles = [
            _bundle("t1", PoolKind.TALK, is_safe_default=True),
            _bundle("n1", PoolKind.NON_TALK, is_safe_default=True),
            _bundle("s1", PoolKind.TO_SELF),
        ]
        with pytest.raises(ValidationError, match="to_self"):
            validate_catalog(bundles)

    def test_duplicate_id_rejected(self):
        bundles = _minimal_bundles() + [_bundle("t1", PoolKind.TALK)]
        with pytest.raises(ValidationError, match="t1"):
            validate_catalog(bundles)

    def test_multiple_safe_defaults_rejected(self):
        bundles = _minimal_bundles() + [
            _bundle("t2", PoolKind.TALK, is_safe_default=True)
        ]
        with pytest.raises(ValidationError, match="multiple safe defaults"):
            validate_catalog(bundles)

    def test_pglv_out_of_range_names_bundle(self):
        bundles = _minimal_bundles() + [_bundle("t9", PoolKind.TALK, pglv=4)]
        with pytest.raises(ValidationError, match="t9"):
            validate_catalog(bundles)

    def test_empty_pool_rejected(self):
        bundles = [
            _bundle("t1", PoolKind.TALK, is_safe_default=True),
            _bundle("n1", PoolKind.NON_TALK, is_safe_default=True),
        ]
        with pytest.raises(ValidationError, match="to_self"):
            validate_catalog(bundles)

    def test_malformed_line_is_parse_error(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "x", "name": "x"\n')
        with pytest.raises(ParseError):
            load_catalog(path)

    def test_full_profile_catalog_loads(self, tmp_path):
        lines = []
        specs = [("talk", 258), ("non_talk", 90), ("to_self", 30)]
        for pool, count in specs:
            for i in range(count):
                lines.append(
                    json.dumps(
                        {
                            "id": f"{pool}_{i}",
                            "name": f"{pool} action {i}",
                            "pool": pool,
                            "pglv": 1,
                            "emotion_valence": [],
                            "safe_default": i == 0,
                        }
                    )
                )
        path = tmp_path / "full.jsonl"
        path.write_text("\n".join(lines) + "\n")
        catalog = load_catalog(path)
        assert catalog.matches_full_profile()

    def test_sample_catalog_is_not_full_profile(self, catalog):
        assert not catalog.matches_full_profile()

    def test_round_trip_identical(self, catalog, tmp_path):
        out = tmp_path / "roundtrip.jsonl"
        save_catalog(catalog, out)
        reloaded = load_catalog(out)
        assert reloaded.bundles == catalog.bundles
        # And a second serialization is byte-identical.
        out2 = tmp_path / "roundtrip2.jsonl"
        save_catalog(reloaded, out2)
        assert out.read_bytes() == out2.read_bytes()


class TestEvent:
    def test_source_zero_kinds_enforced(self):
        with pytest.raises(ContractViolation):
            Event(event_id=1, logical_time=0, actor="A", kind=EventKind.REPLY, source=0)
        with pytest.raises(ContractViolation):
            Event(
                event_id=1,
                logical_time=0,
                actor="A",
                kind=EventKind.WHISPER,
                source=2,
            )

    def test_reply_needs_depth_two(self):
        with pytest.raises(ContractViolation):
            Event(event_id=1, logical_time=0, actor="A", kind=EventKind.REPLY, source=1)

    def test_autonomous_is_source_one(self):
        with pytest.raises(ContractViolation):
            Event(
                event_id=1,
                logical_time=0,
                actor="A",
                kind=EventKind.AUTONOMOUS_ACTION,
                source=2,
            )

    def test_json_round_trip(self):
        event = Event(
            event_id=7,
            logical_time=3,
            actor="A",
            target="B",
            kind=EventKind.REPLY,
            source=4,
            bundle_pair=("t_debate", "n_cross_arms"),
            dialogue="hm",
            reply_to=6,
        )
        assert Event.from_json_dict(event.to_json_dict()) == event


class TestPriority:
    def test_whisper_source_zero_is_a(self):
        e = Event(event_id=1, logical_time=0, actor="A", kind=EventKind.WHISPER, source=0)
        assert classify_priority(e) is PriorityClass.A

    def test_reply_is_b(self):
        e = Event(event_id=1, logical_time=0, actor="A", kind=EventKind.REPLY, source=3)
        assert classify_priority(e) is PriorityClass.B

    def test_autonomous_is_c(self):
        e = Event(
            event_id=1, logical_time=0, actor="A", kind=EventKind.AUTONOMOUS_ACTION, source=1
        )
        assert classify_priority(e) is PriorityClass.C

    def test_total_over_all_kinds(self):
        samples = [
            Event(event_id=1, logical_time=0, actor="A", kind=EventKind.INJECTED_SOCIAL, source=0),
            Event(event_id=2, logical_time=0, actor="A", kind=EventKind.TRIGGER, source=0),
            Event(event_id=3, logical_time=0, actor="A", kind=EventKind.SELF_ACTION, source=1),
            Event(event_id=4, logical_time=0, actor="A", kind=EventKind.FALLBACK, source=5),
        ]
        for e in samples:
            assert classify_priority(e) in PriorityClass


class TestNextSource:
    def test_autonomous_reply_is_first_hop(self):
        assert next_source(1) == 2

    def test_injected_reply_is_first_hop(self):
        assert next_source(0) == 2

    def test_plain_increment(self):
        assert next_source(4) == 5

    def test_negative_rejected(self):
        with pytest.raises(ContractViolation):
            next_source(-1)
