"""Semantic retrieval: cosine search over hyperedges, entity linking, expansion.

All operations here are read-only over sealed stores. Hyperedge retrieval is
an exhaustive cosine scan (exact, sufficient at desk scale); entity linking
is deterministic dictionary matching, longest match first.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

import numpy as np

from .embedding import Embedder
from .errors import DimensionMismatchError, PreconditionError
from .hypergraph import BipartiteStore

logger = logging.getLogger(__name__)


@dataclass
class MetadataQuery:
    """Clinical metadata or question text, with optional role/domain tags.

    The tags never alter scoring; they flow through to prompt assembly.
    """

    text: str
    role: str | None = None
    domain: str | None = None

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise PreconditionError("query text must be non-empty")


def cosine(u, v) -> float:
    """Standard cosine similarity in [-1, 1].

    A zero vector has no direction; by convention the score degenerates to
    0.0 (logged at debug level) instead of raising.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatchError(f"cosine over mismatched shapes {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        logger.debug("cosine of a zero vector is degenerate; returning 0.0")
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


@dataclass
class ScoredHyperedge:
    hyperedge_id: int
    score: float
    rank: int


def retrieve_hyperedges(
    mq: MetadataQuery,
    embedder: Embedder,
    store: BipartiteStore,
    k: int = 1,
    layer: str | None = "knowledge",
) -> list[ScoredHyperedge]:
    """Top-k hyperedges by cosine between the query embedding and edge embeddings.

    Scans every embedded hyperedge in the selected layer (``layer=None``
    scans all layers). Ties break by ascending hyperedge id; edges without
    embeddings are skipped.
    """
    if not store.sealed:
        raise PreconditionError("retrieval requires a sealed store")
    if k < 1:
        raise PreconditionError("k must be >= 1")
    query_vec = embedder.embed(mq.text)
    scored = []
    for hid in sorted(store.hyperedges):
        edge = store.hyperedges[hid]
        if layer is not None and edge.layer != layer:
            continue
        if edge.embedding is None:
            continue
        scored.append((-cosine(query_vec, edge.embedding), hid))
    scored.sort()
    return [
        ScoredHyperedge(hid, -neg, rank)
        for rank, (neg, hid) in enumerate(scored[:k], start=1)
    ]


@dataclass
class EntityMatch:
    entity_id: int
    start: int
    end: int
    surface: str
    kind: str  # "exact-name" | "alias-normalized"


_WORD = re.compile(r"[0-9A-Za-z]+")


def _word_tokens(text: str) -> list[tuple[str, int, int]]:
    return [(m.group(0).lower(), m.start(), m.end()) for m in _WORD.finditer(text)]


def find_entity_mentions(text: str, store: BipartiteStore) -> list[EntityMatch]:
    """Dictionary entity linking over free text (no store lifecycle check).

    Entity names are matched case-insensitively on word-token sequences, so
    punctuation variants of a name still link ("spike-wave" matches "spike
    wave"). Overlaps resolve longest match first, then leftmost; results
    come back in text order.
    """
    tokens = _word_tokens(text)
    if not tokens:
        return []
    by_token_seq: dict[tuple[str, ...], int] = {}
    for eid in sorted(store.entities):
        seq = tuple(t.lower() for t in _WORD.findall(store.entities[eid].name))
        if seq and seq not in by_token_seq:
            by_token_seq[seq] = eid

    candidates = []
    token_words = [t[0] for t in tokens]
    for seq, eid in by_token_seq.items():
        width = len(seq)
        for i in range(len(tokens) - width + 1):
            if tuple(token_words[i : i + width]) == seq:
                start = tokens[i][1]
                end = tokens[i + width - 1][2]
                candidates.append((end - start, start, eid))

    chosen: list[tuple[int, int, int]] = []
    taken: list[tuple[int, int]] = []
    for length, start, eid in sorted(candidates, key=lambda c: (-c[0], c[1])):
        end = start + length
        if any(start < t_end and end > t_start for t_start, t_end in taken):
            continue
        taken.append((start, end))
        chosen.append((start, end, eid))

    matches = []
    for start, end, eid in sorted(chosen):
        surface = text[start:end]
        name = store.entities[eid].name
        kind = "exact-name" if surface.lower() == name.lower() else "alias-normalized"
        matches.append(EntityMatch(eid, start, end, surface, kind))
    return matches


def extract_query_entities(mq: MetadataQuery, store: BipartiteStore) -> list[EntityMatch]:
    """Entity linking over the query text of a sealed store."""
    if not store.sealed:
        raise PreconditionError("entity extraction requires a sealed store")
    return find_entity_mentions(mq.text, store)


def expand_entities(matches: list[EntityMatch], store: BipartiteStore) -> set[int]:
    """Union of hyperedges incident to any matched entity."""
    if not store.sealed:
        raise PreconditionError("expansion requires a sealed store")
    edges: set[int] = set()
    for match in matches:
        edges |= store.incident_hyperedges(match.entity_id)
    return edges
