"""Bipartite hypergraph store: entities, n-ary hyperedges, and traversal.

The store keeps entities and hyperedges as two node families of one graph,
linked only by incidence (an edge node connects to each of its member entity
nodes). That uniform view makes BFS-style traversal type-agnostic, which the
retrieval-fusion stage relies on.

Lifecycle: a store is mutable while being built (single writer), then
``seal()`` freezes it for unlimited concurrent readers. There is no
reader/writer interleaving; re-ingestion starts from a fresh load.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    NotFoundError,
    PreconditionError,
    ReferentialError,
    StoreSealedError,
)
from .hashing import collapse_whitespace, entity_id, hyperedge_id, is_hyperedge_id

FORMAT_VERSION = 1

KNOWLEDGE_LAYER = "knowledge"
CASE_LAYER = "case"
LAYERS = (KNOWLEDGE_LAYER, CASE_LAYER)


@dataclass
class Entity:
    """A named clinical concept node shared across layers."""

    id: int
    name: str
    etype: str
    definition: str
    embedding: np.ndarray | None = None


@dataclass
class Hyperedge:
    """An n-ary relation: one fact description over a set of member entities."""

    id: int
    description: str
    members: frozenset[int]
    layer: str
    embedding: np.ndarray | None = None


@dataclass
class Neighborhood:
    """BFS result over the bipartite graph, split by node kind."""

    entity_ids: set[int] = field(default_factory=set)
    hyperedge_ids: set[int] = field(default_factory=set)

    @property
    def nodes(self) -> set[int]:
        return self.entity_ids | self.hyperedge_ids

    def __contains__(self, node_id: int) -> bool:
        return node_id in self.entity_ids or node_id in self.hyperedge_ids


class BipartiteStore:
    """In-memory hypergraph with content-addressed ids and an incidence index.

    ``incidence`` is maintained as the exact inverse of the member relation:
    ``e in incidence[v]  <=>  v in members(e)`` for every reachable state.
    """

    def __init__(self, embedding_dim: int = 256):
        if embedding_dim < 1:
            raise PreconditionError("embedding_dim must be >= 1")
        self.embedding_dim = embedding_dim
        self.entities: dict[int, Entity] = {}
        self.hyperedges: dict[int, Hyperedge] = {}
        self.incidence: dict[int, set[int]] = {}
        self._sealed = False

    # -- lifecycle -----------------------------------------------------------

    @property
    def sealed(self) -> bool:
        return self._sealed

    def seal(self) -> None:
        """Freeze the store; subsequent mutations raise ``StoreSealedError``."""
        self._sealed = True

    def _require_unsealed(self) -> None:
        if self._sealed:
            raise StoreSealedError("store is sealed; build a new store to re-ingest")

    def _check_dim(self, embedding: np.ndarray | None) -> np.ndarray | None:
        if embedding is None:
            return None
        vec = np.asarray(embedding, dtype=np.float64)
        if vec.ndim != 1 or vec.shape[0] != self.embedding_dim:
            raise DimensionMismatchError(
                f"embedding has dimension {vec.shape}, store expects {self.embedding_dim}"
            )
        return vec

    # -- mutation ------------------------------------------------------------

    def add_entity(
        self,
        name: str,
        etype: str = "",
        definition: str = "",
        embedding: np.ndarray | None = None,
    ) -> int:
        """Register an entity; re-adding the same normalized name merges fields.

        Merge policy: the newest non-empty text field wins; an embedding is
        written only if the stored entity has none (incremental ingestion must
        not destroy data).
        """
        self._require_unsealed()
        if not name or not name.strip():
            raise PreconditionError("entity name must be non-empty")
        vec = self._check_dim(embedding)
        name = collapse_whitespace(name)
        eid = entity_id(name)
        existing = self.entities.get(eid)
        if existing is None:
            self.entities[eid] = Entity(eid, name, etype, definition, vec)
            self.incidence.setdefault(eid, set())
        else:
            if etype:
                existing.etype = etype
            if definition:
                existing.definition = definition
            if vec is not None and existing.embedding is None:
                existing.embedding = vec
        return eid

    def add_hyperedge(
        self,
        description: str,
        members: set[int],
        layer: str = KNOWLEDGE_LAYER,
        embedding: np.ndarray | None = None,
    ) -> int:
        """Store an n-ary relation and index it under every member entity."""
        self._require_unsealed()
        if not members:
            raise PreconditionError("hyperedge members must be non-empty")
        if layer not in LAYERS:
            raise PreconditionError(f"unknown layer {layer!r}; expected one of {LAYERS}")
        unknown = [m for m in members if m not in self.entities]
        if unknown:
            raise ReferentialError(f"hyperedge references unknown entity ids: {sorted(unknown)}")
        vec = self._check_dim(embedding)
        member_set = frozenset(members)
        hid = hyperedge_id(description, member_set, layer)
        existing = self.hyperedges.get(hid)
        if existing is None:
            self.hyperedges[hid] = Hyperedge(hid, description, member_set, layer, vec)
            for m in member_set:
                self.incidence[m].add(hid)
        elif vec is not None and existing.embedding is None:
            existing.embedding = vec
        return hid

    # -- lookup --------------------------------------------------------------

    def entity(self, eid: int) -> Entity:
        try:
            return self.entities[eid]
        except KeyError:
            raise NotFoundError(f"unknown entity id {eid}") from None

    def hyperedge(self, hid: int) -> Hyperedge:
        try:
            return self.hyperedges[hid]
        except KeyError:
            raise NotFoundError(f"unknown hyperedge id {hid}") from None

    def has_node(self, node_id: int) -> bool:
        return node_id in self.hyperedges if is_hyperedge_id(node_id) else node_id in self.entities

    def incident_hyperedges(self, eid: int) -> set[int]:
        """All hyperedges whose member set contains the entity."""
        if eid not in self.entities:
            raise NotFoundError(f"unknown entity id {eid}")
        return set(self.incidence.get(eid, ()))

    # -- traversal -----------------------------------------------------------

    def _neighbors(self, node_id: int):
        if is_hyperedge_id(node_id):
            return self.hyperedges[node_id].members
        return self.incidence.get(node_id, ())

    def neighborhood(self, seeds: set[int], radius: int) -> Neighborhood:
        """All nodes within ``radius`` bipartite hops of any seed.

        Radius 0 returns exactly the seed set. A node only joins the result
        if it is within the hop budget; members of an included hyperedge are
        not pulled in for free.
        """
        if radius < 0:
            raise PreconditionError("radius must be >= 0")
        missing = [s for s in seeds if not self.has_node(s)]
        if missing:
            raise NotFoundError(f"unknown seed node ids: {sorted(missing)}")

        visited = set(seeds)
        frontier = deque(seeds)
        for _ in range(radius):
            if not frontier:
                break
            next_frontier: deque[int] = deque()
            while frontier:
                node = frontier.popleft()
                for nb in self._neighbors(node):
                    if nb not in visited:
                        visited.add(nb)
                        next_frontier.append(nb)
            frontier = next_frontier

        result = Neighborhood()
        for node in visited:
            (result.hyperedge_ids if is_hyperedge_id(node) else result.entity_ids).add(node)
        return result

    # -- persistence ---------------------------------------------------------

    def save(self, directory: str | Path) -> None:
        """Write ``entities.jsonl``, ``hyperedges.jsonl``, and ``meta.json``.

        Rows are sorted by id and sets are serialized sorted, so identical
        stores serialize byte-identically.
        """
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with open(directory / "entities.jsonl", "w", encoding="utf-8") as fh:
            for eid in sorted(self.entities):
                ent = self.entities[eid]
                row = {
                    "id": ent.id,
                    "name": ent.name,
                    "etype": ent.etype,
                    "definition": ent.definition,
                    "embedding": None if ent.embedding is None else ent.embedding.tolist(),
                }
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
        with open(directory / "hyperedges.jsonl", "w", encoding="utf-8") as fh:
            for hid in sorted(self.hyperedges):
                edge = self.hyperedges[hid]
                row = {
                    "id": edge.id,
                    "description": edge.description,
                    "members": sorted(edge.members),
                    "layer": edge.layer,
                    "embedding": None if edge.embedding is None else edge.embedding.tolist(),
                }
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
        meta = {
            "format_version": FORMAT_VERSION,
            "embedding_dim": self.embedding_dim,
            "entity_count": len(self.entities),
            "hyperedge_count": len(self.hyperedges),
        }
        with open(directory / "meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, directory: str | Path) -> "BipartiteStore":
        """Load a persisted store; the result is unsealed (callers seal it)."""
        directory = Path(directory)
        with open(directory / "meta.json", encoding="utf-8") as fh:
            meta = json.load(fh)
        if meta.get("format_version") != FORMAT_VERSION:
            raise PreconditionError(
                f"unsupported store format version {meta.get('format_version')!r}"
            )
        store = cls(embedding_dim=meta["embedding_dim"])
        with open(directory / "entities.jsonl", encoding="utf-8") as fh:
            for line in fh:
                row = json.loads(line)
                emb = None if row["embedding"] is None else np.asarray(row["embedding"])
                store.entities[row["id"]] = Entity(
                    row["id"], row["name"], row["etype"], row["definition"], emb
                )
                store.incidence.setdefault(row["id"], set())
        with open(directory / "hyperedges.jsonl", encoding="utf-8") as fh:
            for line in fh:
                row = json.loads(line)
                emb = None if row["embedding"] is None else np.asarray(row["embedding"])
                edge = Hyperedge(
                    row["id"], row["description"], frozenset(row["members"]), row["layer"], emb
                )
                store.hyperedges[edge.id] = edge
                for m in edge.members:
                    if m not in store.entities:
                        raise ReferentialError(
                            f"hyperedge {edge.id} references unknown entity {m}"
                        )
                    store.incidence[m].add(edge.id)
        return store
