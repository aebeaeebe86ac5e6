#!/usr/bin/env python3
"""Regenerate the fixture files shipped under src/parlor/fixtures/.

The embedding fixture is built from hand-designed geometry so every test
cosine is known in advance:

  - dims 0..11   one orthonormal basis direction per bundle, per pool
                 (pools are never compared to each other, so the basis is
                 reused across pools)
  - dims 12..13  filler used to pad intent vectors to unit norm, and the
                 designed near-duplicate dialogue pair
  - dims 14..31  reserved for hashed out-of-vocabulary text (see
                 FixtureEmbedder); fixture vectors stay zero here

An intent written as  a * basis(bundle) + sqrt(1 - a^2) * filler  has
cosine exactly `a` with its bundle name and 0 with every other name in the
pool, so grounding expectations are readable straight off this script.
"""

import json
import math
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "parlor" / "fixtures"

DIM = 32
HASH_DIMS = 18
FILLER_A = 12
FILLER_B = 13

# ---------------------------------------------------------------------------
# Sample catalog: 12 talk / 8 non-talk / 6 to-self bundles.
# ---------------------------------------------------------------------------

TALK = [
    ("t_ask_opinion", "Ask for opinion", [], 1, 0, True),
    ("t_suggest", "Suggest an improvement", [], 1, 0, False),
    ("t_compromise", "Propose a compromise", [], 1, 1, False),
    ("t_fear", "Express fear/anxiety", ["sad"], 1, 0, False),
    ("t_disagree", "Express disagreement/disapproval", ["angry"], 1, -1, False),
    ("t_sadness", "Express sadness/disappointment", ["sad"], 1, 0, False),
    ("t_challenge", "Challenge someone's feelings", ["angry"], 2, -1, False),
    ("t_teach", "Teach Knowledge", [], 1, 0, False),
    ("t_praise", "Praise/Compliment", ["happy"], 1, 1, False),
    ("t_reveal", "Reveal vulnerabilities", [], 2, 1, False),
    ("t_debate", "Debate with", [], 1, -1, False),
    ("t_discuss", "Discuss common interests", [], 1, 1, False),
]

NON_TALK = [
    ("n_nod", "Nod in agreement", [], 1, 0, True),
    ("n_smile", "Smile", ["happy"], 1, 0, False),
    ("n_wave", "Wave hello", [], 1, 0, False),
    ("n_frown", "Frown", ["sad", "angry"], 1, 0, False),
    ("n_cross_arms", "Cross your arms", ["angry"], 1, 0, False),
    ("n_pat", "Pat on the shoulder", [], 2, 0, False),
    ("n_photo", "Take a photo together", [], 1, 0, False),
    ("n_thumb_lips", "Run your thumb across their lips", [], 3, 0, False),
]

TO_SELF = [
    ("s_look", "Look around", [], 1, 0, True),
    ("s_read", "Read a book", [], 1, 0, False),
    ("s_jump", "Jump", [], 1, 0, False),
    ("s_stretch", "Stretch", [], 1, 0, False),
    ("s_hum", "Hum a tune", [], 1, 0, False),
    ("s_doodle", "Doodle in a notebook", [], 1, 0, False),
]

POOLS = {"talk": TALK, "non_talk": NON_TALK, "to_self": TO_SELF}


def write_catalog() -> None:
    lines = []
    for pool_name, bundles in POOLS.items():
        for i, (bid, name, valence, pglv, delta, default) in enumerate(bundles):
            obj = {
                "id": bid,
                "name": name,
                "pool": pool_name,
                "emotion_valence": valence,
                "pglv": pglv,
            }
            if delta:
                obj["relationship_delta"] = delta
            if default:
                obj["safe_default"] = True
            if i == 0:
                obj["metadata"] = {"animation": f"{pool_name}_idle"}
            lines.append(json.dumps(obj, sort_keys=True))
    (FIXTURES / "catalog_sample.jsonl").write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Embedding fixture.
# ---------------------------------------------------------------------------


def basis(i: int, scale: float = 1.0) -> list[float]:
    v = [0.0] * DIM
    v[i] = scale
    return v


def blend(parts: list[tuple[int, float]], filler_dim: int = FILLER_A) -> list[float]:
    """Unit vector with the given (dim, weight) parts, padded on a filler dim."""
    v = [0.0] * DIM
    total = 0.0
    for dim, weight in parts:
        v[dim] = weight
        total += weight * weight
    if total > 1.0 + 1e-12:
        raise ValueError(f"weights overflow unit norm: {parts}")
    v[filler_dim] = math.sqrt(max(0.0, 1.0 - total))
    return v


def bundle_dim(pool: str, bundle_id: str) -> int:
    for i, row in enumerate(POOLS[pool]):
        if row[0] == bundle_id:
            return i
    raise KeyError(bundle_id)


# intent text -> (pool, [(bundle_id, cosine), ...])
INTENTS: dict[str, tuple[str, list[tuple[str, float]]]] = {
    # Rule-table proposal names (policy mock -> grounding).
    "praise their achievement": ("talk", [("t_praise", 0.88)]),
    "push back on their view": ("talk", [("t_disagree", 0.80)]),
    "express sympathy for their sadness": ("talk", [("t_sadness", 0.75)]),
    "challenge how they really feel": ("talk", [("t_challenge", 0.82)]),
    "ask for their opinion": ("talk", [("t_ask_opinion", 0.90)]),
    "open up about vulnerabilities": ("talk", [("t_reveal", 0.84)]),
    "start a debate with them": ("talk", [("t_debate", 0.86)]),
    "discuss shared interests": ("talk", [("t_discuss", 0.83)]),
    "suggest an improvement": ("talk", [("t_suggest", 0.86)]),
    "propose a middle ground": ("talk", [("t_compromise", 0.70)]),
    "admit your fears": ("talk", [("t_fear", 0.76)]),
    "teach them something": ("talk", [("t_teach", 0.80)]),
    "smile warmly": ("non_talk", [("n_smile", 0.90)]),
    "cross your arms": ("non_talk", [("n_cross_arms", 0.92)]),
    "pat them on the shoulder": ("non_talk", [("n_pat", 0.78)]),
    "frown at them": ("non_talk", [("n_frown", 0.85)]),
    "nod along": ("non_talk", [("n_nod", 0.87)]),
    "lean in closer": ("non_talk", [("n_thumb_lips", 0.40), ("n_pat", 0.35)]),
    "stretch and look around": ("to_self", [("s_stretch", 0.80)]),
    # Grounding probes, talk pool.
    "ask for their opinion on something": ("talk", [("t_ask_opinion", 0.85)]),
    "suggest a way to improve things": ("talk", [("t_suggest", 0.86)]),
    "propose a middle-ground compromise": ("talk", [("t_compromise", 0.83)]),
    "express my fear and anxiety about the situation": ("talk", [("t_fear", 0.79)]),
    "express that I agree with what they said": ("talk", [("t_disagree", 0.56)]),
    "ask them about their future goals and dreams": ("talk", [("t_teach", 0.42)]),
    "praise their hard work": ("talk", [("t_praise", 0.82)]),
    "open up about a painful memory": ("talk", [("t_reveal", 0.66)]),
    "spark a friendly argument": ("talk", [("t_debate", 0.58)]),
    "check in on how someone is feeling emotionally": (
        "talk",
        [("t_challenge", 0.55), ("t_ask_opinion", 0.50)],
    ),
    "comfort a friend who seems sad": (
        "talk",
        [("t_sadness", 0.42), ("t_reveal", 0.40)],
    ),
    # Grounding probes, non-talk pool.
    "give them a warm smile": ("non_talk", [("n_smile", 0.90)]),
    "nod to show agreement": ("non_talk", [("n_nod", 0.88)]),
    "wave at them in greeting": ("non_talk", [("n_wave", 0.84)]),
    "pat them gently on the shoulder": ("non_talk", [("n_pat", 0.70)]),
    "take a photo with them": (
        "non_talk",
        [("n_thumb_lips", 0.636), ("n_photo", 0.55)],
    ),
    # Grounding probes, to-self pool.
    "read a book quietly": ("to_self", [("s_read", 0.634)]),
    "jump up and down": ("to_self", [("s_jump", 0.80)]),
    "stretch for a bit": ("to_self", [("s_stretch", 0.85)]),
    "hum your favorite tune": ("to_self", [("s_hum", 0.80)]),
    "teleport to a different dimension": ("to_self", [("s_jump", 0.248)]),
    "teleport elsewhere": ("to_self", [("s_jump", 0.248)]),
    "doodle something in your notebook": ("to_self", [("s_doodle", 0.80)]),
    "look around the room": ("to_self", [("s_look", 0.90)]),
}

# Designed near-duplicate dialogue pair: cosine = 0.8*0.6 + 0.6*0.8 = 0.96.
DIALOGUE_PAIR = {
    "That was a brilliant move, truly.": [(FILLER_A, 0.8), (FILLER_B, 0.6)],
    "Truly, that move was brilliant.": [(FILLER_A, 0.6), (FILLER_B, 0.8)],
}


def write_embeddings() -> None:
    lines = [json.dumps({"dim": DIM, "hash_dims": HASH_DIMS})]
    for pool_name, bundles in POOLS.items():
        for i, row in enumerate(bundles):
            lines.append(json.dumps({"text": row[1], "vector": basis(i)}))
    for text, (pool, parts) in INTENTS.items():
        vec = blend([(bundle_dim(pool, bid), w) for bid, w in parts])
        lines.append(json.dumps({"text": text, "vector": vec}))
    for text, parts in DIALOGUE_PAIR.items():
        v = [0.0] * DIM
        for dim, weight in parts:
            v[dim] = weight
        lines.append(json.dumps({"text": text, "vector": v}))
    (FIXTURES / "embeddings_fixture.jsonl").write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Mock-policy rule table (ordered; first keyword hit wins).
# ---------------------------------------------------------------------------

RULES = [
    {
        "keyword": "compliment",
        "talk_name": "praise their achievement",
        "nontalk_name": "smile warmly",
        "dialogue": "That last pitch you closed, {target}? Brilliant.",
        "dialogue_alt": "Honestly, {target}, that was brilliant work.",
    },
    {
        "keyword": "praise",
        "talk_name": "praise their achievement",
        "nontalk_name": "smile warmly",
        "dialogue": "That last pitch you closed, {target}? Brilliant.",
        "dialogue_alt": "Honestly, {target}, that was brilliant work.",
    },
    {
        "keyword": "push back",
        "talk_name": "push back on their view",
        "nontalk_name": "cross your arms",
        "dialogue": "I have to push back on that, {target}.",
        "dialogue_alt": "No, {target} — I see it differently.",
    },
    {
        "keyword": "disagree",
        "talk_name": "push back on their view",
        "nontalk_name": "cross your arms",
        "dialogue": "I have to push back on that, {target}.",
        "dialogue_alt": "No, {target} — I see it differently.",
    },
    {
        "keyword": "comfort",
        "talk_name": "express sympathy for their sadness",
        "nontalk_name": "pat them on the shoulder",
        "dialogue": "Hey {target}, that really is rough.",
        "dialogue_alt": "I'm here, {target}. That stings, I know.",
    },
    {
        "keyword": "challenge",
        "talk_name": "challenge how they really feel",
        "nontalk_name": "frown at them",
        "dialogue": "Do you actually believe that, {target}?",
        "dialogue_alt": "Come on, {target} — what's really going on?",
    },
    {
        "keyword": "opinion",
        "talk_name": "ask for their opinion",
        "nontalk_name": "nod along",
        "dialogue": "What's your honest take, {target}?",
        "dialogue_alt": "Tell me straight, {target} — what do you think?",
    },
    {
        "keyword": "teach",
        "talk_name": "teach them something",
        "dialogue": "Fun fact, {target}: it wasn't always done this way.",
        "dialogue_alt": "Let me show you a trick, {target}.",
    },
    {
        "keyword": "compromise",
        "talk_name": "propose a middle ground",
        "nontalk_name": "nod along",
        "dialogue": "What if we met in the middle, {target}?",
        "dialogue_alt": "There's a version of this where we both win, {target}.",
    },
    {
        "keyword": "debate",
        "talk_name": "start a debate with them",
        "nontalk_name": "cross your arms",
        "dialogue": "I'll take the other side, {target} — convince me.",
        "dialogue_alt": "That argument has holes, {target}, and you know it.",
    },
    {
        "keyword": "fear",
        "talk_name": "admit your fears",
        "dialogue": "Honestly, {target}, this scares me a little.",
        "dialogue_alt": "I keep worrying about this, {target}.",
    },
    {
        "keyword": "discuss",
        "talk_name": "discuss shared interests",
        "nontalk_name": "smile warmly",
        "dialogue": "We keep coming back to the same things, {target} — I love that.",
        "dialogue_alt": "So {target}, same obsessions as always?",
    },
    {
        "keyword": "interests",
        "talk_name": "discuss shared interests",
        "nontalk_name": "smile warmly",
        "dialogue": "We keep coming back to the same things, {target} — I love that.",
        "dialogue_alt": "So {target}, same obsessions as always?",
    },
    {
        "keyword": "personal",
        "talk_name": "open up about vulnerabilities",
        "nontalk_name": "lean in closer",
        "dialogue": "Alright {target}, something real: I don't usually tell people this.",
        "dialogue_alt": "You first, {target}. Then I'll tell you mine.",
    },
    {
        "keyword": "improve",
        "talk_name": "suggest an improvement",
        "nontalk_name": "nod along",
        "dialogue": "Small idea, {target}: there's a cleaner way to do this.",
        "dialogue_alt": "Can I suggest a tweak, {target}?",
    },
    {
        "keyword": "heartbeat",
        "self_name": "stretch and look around",
    },
]


def write_rules() -> None:
    lines = [json.dumps(rule, ensure_ascii=False) for rule in RULES]
    (FIXTURES / "policy_rules.jsonl").write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Grounding probe set (20 probes, difficulty-stratified).
# ---------------------------------------------------------------------------

PROBES = [
    # pool, intent, expected, expect_fallback, difficulty
    ("talk", "ask for their opinion on something", "t_ask_opinion", False, "paraphrase"),
    ("talk", "suggest a way to improve things", "t_suggest", False, "paraphrase"),
    ("talk", "propose a middle-ground compromise", "t_compromise", False, "paraphrase"),
    ("talk", "express my fear and anxiety about the situation", "t_fear", False, "paraphrase"),
    ("talk", "express that I agree with what they said", "t_disagree", False, "indirect"),
    ("talk", "ask them about their future goals and dreams", "t_teach", False, "indirect"),
    ("talk", "praise their hard work", "t_praise", False, "paraphrase"),
    ("talk", "open up about a painful memory", "t_reveal", False, "indirect"),
    ("talk", "spark a friendly argument", "t_debate", False, "indirect"),
    ("talk", "check in on how someone is feeling emotionally", "t_ask_opinion", False, "adjacent"),
    ("non_talk", "give them a warm smile", "n_smile", False, "paraphrase"),
    ("non_talk", "nod to show agreement", "n_nod", False, "paraphrase"),
    ("non_talk", "wave at them in greeting", "n_wave", False, "paraphrase"),
    ("non_talk", "pat them gently on the shoulder", "n_pat", False, "paraphrase"),
    ("non_talk", "take a photo with them", "n_photo", False, "adjacent"),
    ("to_self", "read a book quietly", "s_read", False, "paraphrase"),
    ("to_self", "jump up and down", "s_jump", False, "paraphrase"),
    ("to_self", "stretch for a bit", "s_stretch", False, "paraphrase"),
    ("to_self", "hum your favorite tune", "s_hum", False, "paraphrase"),
    ("to_self", "teleport to a different dimension", None, True, "out_of_scope"),
]


def write_probes() -> None:
    lines = []
    for i, (pool, intent, expected, fallback, difficulty) in enumerate(PROBES, start=1):
        lines.append(
            json.dumps(
                {
                    "probe_id": f"p{i:02d}",
                    "pool": pool,
                    "intent": intent,
                    "expected": expected,
                    "expect_fallback": fallback,
                    "difficulty": difficulty,
                },
                sort_keys=True,
            )
        )
    (FIXTURES / "probes_grounding.jsonl").write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Whisper benchmark cases (20 to-other + 10 to-self) and cross-whisper pairs.
# ---------------------------------------------------------------------------

TO_OTHER_CASES = [
    # whisper, expected talk bundle, direction, annotation, failure_mode
    ("compliment their recent achievement", "t_praise", "affirming", "success", None),
    ("push back openly and directly on their perspective", "t_disagree", "confronting", "success", None),
    ("comfort them about the setback", "t_sadness", "supportive", "partial", "talk_misalignment"),
    ("challenge how they are feeling", "t_challenge", "confronting", "success", None),
    ("ask for their honest opinion", "t_ask_opinion", "curious", "success", None),
    ("teach them something new", "t_teach", "giving", "success", None),
    ("suggest a compromise between you two", "t_compromise", "bridging", "success", None),
    ("start a heated debate", "t_debate", "confronting", "success", None),
    ("admit your fear about this", "t_fear", "vulnerable", "success", None),
    ("discuss your common interests", "t_discuss", "bonding", "success", None),
    ("ask them to share something personal", "t_reveal", "intimate", "partial", "action_misalignment"),
    ("suggest a way they could improve", "t_suggest", "constructive", "success", None),
    ("praise the meal they cooked", "t_praise", "affirming", "success", None),
    ("encourage them to push back on the unfair decision", "t_disagree", "confronting", "success", None),
    ("gently tease them into a debate", "t_debate", "playful", "success", None),
    ("get their opinion on the new plan", "t_ask_opinion", "curious", "success", None),
    ("show you disagree with their take", "t_disagree", "confronting", "partial", "talk_misalignment"),
    ("make them feel appreciated with a compliment", "t_praise", "affirming", "success", None),
    ("open up to them about something personal", "t_reveal", "intimate", "partial", "over_softened"),
    ("hmm maybe say something nice-ish?", "t_ask_opinion", "positive", "partial", "unclear_whisper"),
]

TO_SELF_CASES = [
    ("read a book quietly", False, "success", None),
    ("stretch for a bit", False, "success", None),
    ("hum your favorite tune", False, "success", None),
    ("jump up and down", False, "success", None),
    ("doodle something in your notebook", False, "success", None),
    ("look around the room", False, "success", None),
    ("teleport elsewhere", True, "failure", "semantic_drift"),
    ("fly to the moon", True, "failure", "semantic_drift"),
    ("breathe fire like a dragon", True, "failure", "semantic_drift"),
    ("turn invisible right now", True, "failure", "semantic_drift"),
]

CROSS_PAIRS = [
    ("compliment their recent achievement", "t_praise",
     "push back openly and directly on their perspective", "t_disagree"),
    ("comfort them about the setback", "t_sadness",
     "challenge how they are feeling", "t_challenge"),
    ("ask for their honest opinion", "t_ask_opinion",
     "teach them something new", "t_teach"),
    ("suggest a compromise between you two", "t_compromise",
     "start a heated debate", "t_debate"),
    ("admit your fear about this", "t_fear",
     "discuss your common interests", "t_discuss"),
]


def write_cases() -> None:
    lines = []
    n = 1
    for whisper, expected, direction, annotation, failure_mode in TO_OTHER_CASES:
        lines.append(
            json.dumps(
                {
                    "type": "case",
                    "case_id": f"w{n:02d}",
                    "condition": "to_other",
                    "agent_id": "A",
                    "target_id": "B",
                    "whisper": whisper,
                    "expected_direction": direction,
                    "expected_talk_bundle": expected,
                    "annotation": annotation,
                    "failure_mode": failure_mode,
                },
                sort_keys=True,
            )
        )
        n += 1
    for whisper, expect_fallback, annotation, failure_mode in TO_SELF_CASES:
        lines.append(
            json.dumps(
                {
                    "type": "case",
                    "case_id": f"w{n:02d}",
                    "condition": "to_self",
                    "agent_id": "A",
                    "target_id": None,
                    "whisper": whisper,
                    "expect_fallback": expect_fallback,
                    "annotation": annotation,
                    "failure_mode": failure_mode,
                },
                sort_keys=True,
            )
        )
        n += 1
    for i, (wa, ta, wb, tb) in enumerate(CROSS_PAIRS, start=1):
        lines.append(
            json.dumps(
                {
                    "type": "cross_pair",
                    "pair_id": f"x{i}",
                    "agent_id": "A",
                    "target_id": "B",
                    "whisper_a": wa,
                    "expected_talk_a": ta,
                    "whisper_b": wb,
                    "expected_talk_b": tb,
                },
                sort_keys=True,
            )
        )
    (FIXTURES / "cases_whisper.jsonl").write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Party-room scenario: five player-owned characters.
# ---------------------------------------------------------------------------


def write_scenario() -> None:
    lines = [
        json.dumps(
            {"schema": "parlor.scenario", "room_id": "party", "config": {}},
            sort_keys=True,
        )
    ]
    names = {"A": "Aria", "B": "Bodhi", "C": "Cleo", "D": "Dart", "E": "Echo"}
    for agent_id, display in names.items():
        lines.append(
            json.dumps(
                {
                    "agent_id": agent_id,
                    "display_name": display,
                    "emotion": "neutral",
                    "relationship": {},
                    "heartbeat_period": 40,
                    "heartbeat_offset": 0,
                    "player_id": f"player_{agent_id.lower()}",
                },
                sort_keys=True,
            )
        )
    (FIXTURES / "scenario_party.jsonl").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    FIXTURES.mkdir(parents=True, exist_ok=True)
    write_catalog()
    write_embeddings()
    write_rules()
    write_probes()
    write_cases()
    write_scenario()
    print(f"fixtures written to {FIXTURES}")
