from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from eegrag.embedding import HashedTokenEmbedder
from eegrag.hypergraph import BipartiteStore

FIXTURES = Path(__file__).parent.parent / "fixtures" / "corpus"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def embedder() -> HashedTokenEmbedder:
    return HashedTokenEmbedder(64)


def random_store(
    rng: np.random.Generator,
    max_entities: int = 30,
    max_edges: int = 20,
    embedder: HashedTokenEmbedder | None = None,
) -> BipartiteStore:
    """A random bipartite store for property tests (<= 50 nodes by default)."""
    store = BipartiteStore(embedding_dim=embedder.dim if embedder else 8)
    n_entities = int(rng.integers(1, max_entities + 1))
    entity_ids = []
    for i in range(n_entities):
        name = f"entity-{i}"
        emb = embedder.embed(name) if embedder else None
        entity_ids.append(store.add_entity(name, "t", f"def {i}", embedding=emb))
    n_edges = int(rng.integers(0, max_edges + 1))
    for j in range(n_edges):
        arity = int(rng.integers(1, min(4, len(entity_ids)) + 1))
        picks = rng.choice(len(entity_ids), size=arity, replace=False)
        members = {entity_ids[i] for i in picks}
        desc = f"edge {j} over {sorted(members)}"
        emb = embedder.embed(desc) if embedder else None
        store.add_hyperedge(desc, members, embedding=emb)
    return store


def reference_bfs(store: BipartiteStore, seeds: set[int], radius: int) -> set[int]:
    """Textbook BFS over the explicit bipartite adjacency (test oracle)."""
    adjacency: dict[int, set[int]] = {eid: set() for eid in store.entities}
    for hid, edge in store.hyperedges.items():
        adjacency[hid] = set(edge.members)
        for m in edge.members:
            adjacency[m].add(hid)
    depth = {s: 0 for s in seeds}
    queue = list(seeds)
    while queue:
        node = queue.pop(0)
        if depth[node] == radius:
            continue
        for nb in adjacency[node]:
            if nb not in depth:
                depth[nb] = depth[node] + 1
                queue.append(nb)
    return set(depth)
