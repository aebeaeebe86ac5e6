"""Agent-world interface: embedding retrieval over bundle pools with fallback.

Free-text intent (or a model-selected bundle name) is resolved to an
executable bundle by cosine similarity over embedded bundle names, after an
emotion-exclusion and content-level filter. When the best match is below
the confidence threshold the pool's designated safe default executes
instead, so grounding is total: raw model output is never executable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol, Sequence

import numpy as np

from .errors import (
    ContractViolation,
    DimensionMismatch,
    EmbedderFailure,
    EmptyCandidates,
    EmptyIntent,
    ParseError,
    ZeroVector,
)
from .model import BehaviorBundle, BundleCatalog, EmotionState, PoolKind

# Which valence tags contradict which agent emotion. Neutral excludes none.
EMOTION_EXCLUSIONS: dict[EmotionState, frozenset[EmotionState]] = {
    EmotionState.HAPPY: frozenset({EmotionState.SAD, EmotionState.ANGRY}),
    EmotionState.SAD: frozenset({EmotionState.HAPPY}),
    EmotionState.ANGRY: frozenset({EmotionState.HAPPY}),
    EmotionState.NEUTRAL: frozenset(),
}


class Embedder(Protocol):
    """Deterministic text-to-unit-vector encoder."""

    model_id: str

    def embed(self, text: str) -> np.ndarray: ...


@dataclass(frozen=True)
class GroundingConfig:
    fallback_threshold: float = 0.3
    max_pglv: int = 3
    top_k: int = 3

    def __post_init__(self):
        if not 0.0 <= self.fallback_threshold <= 1.0:
            raise ContractViolation("fallback_threshold must lie in [0, 1]")
        if self.max_pglv not in (1, 2, 3):
            raise ContractViolation("max_pglv must be 1, 2, or 3")


@dataclass(frozen=True)
class GroundingMatch:
    bundle: BehaviorBundle
    similarity: float
    rank: int
    fell_back: bool = False

    def to_json_dict(self) -> dict:
        return {
            "bundle_id": self.bundle.id,
            "similarity": self.similarity,
            "rank": self.rank,
            "fell_back": self.fell_back,
        }


def cosine(u: Sequence[float] | np.ndarray, v: Sequence[float] | np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"{u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine undefined for zero-norm vector")
    return float(np.dot(u, v) / (nu * nv))


class FixtureEmbedder:
    """Table-backed embedder for deterministic desk-scale runs.

    Loads a JSONL fixture whose first line declares the dimension
    (`{"dim": d, "hash_dims": h}`) and whose remaining lines are
    `{"text": ..., "vector": [...]}`. Vectors are stored unnormalized and
    normalized on load. The trailing `hash_dims` dimensions are reserved
    for unlisted text: such text maps to a stable hash-derived unit vector
    in that subspace, so it has zero similarity to every table entry (which
    must stay zero there) while identical strings still embed identically.
    """

    model_id = "fixture"

    def __init__(self, table: dict[str, np.ndarray], dim: int, hash_dims: int = 2):
        if not 1 <= hash_dims < dim:
            raise ParseError("hash_dims must lie in [1, dim)")
        self.dim = dim
        self.hash_dims = hash_dims
        self.table = table

    @classmethod
    def from_file(cls, path: str | Path) -> "FixtureEmbedder":
        path = Path(path)
        table: dict[str, np.ndarray] = {}
        dim: Optional[int] = None
        hash_dims = 2
        with path.open("r", encoding="utf-8") as fh:
            for line_number, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"line {line_number}: invalid JSON: {exc}") from exc
                if dim is None:
                    if "dim" not in obj:
                        raise ParseError("first line must declare {\"dim\": d}")
                    dim = int(obj["dim"])
                    hash_dims = int(obj.get("hash_dims", 2))
                    continue
                vec = np.asarray(obj["vector"], dtype=np.float64)
                if vec.shape != (dim,):
                    raise ParseError(
                        f"line {line_number}: vector has dim {vec.shape}, want ({dim},)"
                    )
                norm = float(np.linalg.norm(vec))
                if norm == 0.0:
                    raise ParseError(f"line {line_number}: zero vector")
                table[str(obj["text"])] = vec / norm
        if dim is None:
            raise ParseError("empty fixture file")
        return cls(table, dim, hash_dims)

    def embed(self, text: str) -> np.ndarray:
        known = self.table.get(text)
        if known is not None:
            return known
        return self._hash_vector(text)

    def _hash_vector(self, text: str) -> np.ndarray:
        digest = hashlib.sha256(text.encode("utf-8")).digest()
        vec = np.zeros(self.dim, dtype=np.float64)
        start = self.dim - self.hash_dims
        for i in range(self.hash_dims):
            vec[start + i] = digest[i % len(digest)] - 127.5
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:  # all bytes exactly 127.5 is impossible; guard anyway
            vec[start] = 1.0
            norm = 1.0
        return vec / norm


class RemoteEmbedder:
    """HTTP client for a sentence-encoder service.

    POSTs `{"texts": [...]}` and expects `{"vectors": [[...], ...]}`.
    Timeouts and non-200 responses surface as EmbedderFailure.
    """

    def __init__(self, endpoint: str, model_id: str = "remote", timeout: float = 10.0):
        self.endpoint = endpoint
        self.model_id = model_id
        self.timeout = timeout
        self._cache: dict[str, np.ndarray] = {}

    def embed(self, text: str) -> np.ndarray:
        cached = self._cache.get(text)
        if cached is not None:
            return cached
        import requests

        try:
            resp = requests.post(
                self.endpoint, json={"texts": [text]}, timeout=self.timeout
            )
        except requests.Timeout as exc:
            raise EmbedderFailure(f"timeout after {self.timeout}s") from exc
        except requests.RequestException as exc:
            raise EmbedderFailure(str(exc)) from exc
        if resp.status_code != 200:
            raise EmbedderFailure(f"status {resp.status_code}")
        try:
            vec = np.asarray(resp.json()["vectors"][0], dtype=np.float64)
        except (KeyError, IndexError, ValueError, TypeError) as exc:
            raise EmbedderFailure(f"malformed response: {exc}") from exc
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise EmbedderFailure("service returned a zero vector")
        vec = vec / norm
        self._cache[text] = vec
        return vec


def filter_candidates(
    pool: list[BehaviorBundle],
    emotion: EmotionState,
    config: GroundingConfig,
) -> list[BehaviorBundle]:
    """Drop emotionally contradictory and over-pglv bundles.

    The pool's safe default survives every filter so fallback can never be
    filtered away; the result may be just that one bundle.
    """
    if not pool:
        raise EmptyCandidates("cannot filter an empty pool")
    excluded = EMOTION_EXCLUSIONS[emotion]
    kept = []
    for b in pool:
        if b.is_safe_default:
            kept.append(b)
            continue
        if b.emotion_valence & excluded:
            continue
        if b.pglv > config.max_pglv:
            continue
        kept.append(b)
    return kept


def retrieve(
    intent: str,
    candidates: list[BehaviorBundle],
    embedder: Embedder,
    k: int,
) -> list[GroundingMatch]:
    """Rank candidates by cosine similarity of their names to the intent.

    Returns min(k, len(candidates)) matches, similarity descending, ties
    broken by ascending bundle id so retrieval is reproducible.
    """
    if not candidates:
        raise EmptyCandidates("retrieve needs at least one candidate")
    if k < 1:
        raise ContractViolation("k must be >= 1")
    query = embedder.embed(intent)
    scored = [(cosine(query, embedder.embed(b.name)), b) for b in candidates]
    scored.sort(key=lambda pair: (-pair[0], pair[1].id))
    return [
        GroundingMatch(bundle=b, similarity=sim, rank=i + 1)
        for i, (sim, b) in enumerate(scored[:k])
    ]


def _ground_pool(
    intent: str,
    catalog: BundleCatalog,
    kind: PoolKind,
    emotion: EmotionState,
    embedder: Embedder,
    config: GroundingConfig,
) -> GroundingMatch:
    candidates = filter_candidates(catalog.pool(kind), emotion, config)
    matches = retrieve(intent, candidates, embedder, config.top_k)
    top = matches[0]
    if top.similarity < config.fallback_threshold:
        # Keep the rejected best similarity for the trace; execute the default.
        return GroundingMatch(
            bundle=catalog.safe_default(kind),
            similarity=top.similarity,
            rank=1,
            fell_back=True,
        )
    return top


def ground_self(
    intent: str,
    catalog: BundleCatalog,
    emotion: EmotionState,
    embedder: Embedder,
    config: GroundingConfig,
) -> GroundingMatch:
    """Match free-text intent directly against the to-self pool."""
    if not intent:
        raise EmptyIntent("self intent must be non-empty")
    return _ground_pool(intent, catalog, PoolKind.TO_SELF, emotion, embedder, config)


def ground_pair(
    talk_name: str,
    nontalk_name: Optional[str],
    catalog: BundleCatalog,
    emotion: EmotionState,
    embedder: Embedder,
    config: GroundingConfig,
) -> tuple[GroundingMatch, Optional[GroundingMatch]]:
    """Ground a proposed (talk, optional non-talk) name pair, each with fallback."""
    if not talk_name:
        raise EmptyIntent("talk name must be non-empty")
    talk = _ground_pool(talk_name, catalog, PoolKind.TALK, emotion, embedder, config)
    nontalk = None
    if nontalk_name:
        nontalk = _ground_pool(
            nontalk_name, catalog, PoolKind.NON_TALK, emotion, embedder, config
        )
    return talk, nontalk
