import pytest

from eegrag.embedding import HashedTokenEmbedder
from eegrag.errors import PreconditionError
from eegrag.hypergraph import BipartiteStore
from eegrag.knowledge import (
    Document,
    EntitySpec,
    ExtractionResult,
    Fact,
    RuleBasedExtractor,
    build_kgh,
    extract_hyperedges,
    load_documents,
    load_fact_sidecar,
)

EMB = HashedTokenEmbedder(32)


def make_fact(description: str, *names: str) -> Fact:
    return Fact(description, [EntitySpec(n, "term", f"def of {n}") for n in names])


class FixedExtractor:
    def __init__(self, facts):
        self.facts = facts

    def extract(self, doc, prompt):
        return ExtractionResult(facts=list(self.facts))


class TestExtraction:
    def test_mock_extractor_passthrough(self):
        doc = Document("d1", "t", "body text")
        facts = [make_fact("f1", "A", "B"), make_fact("f2", "C")]
        result = extract_hyperedges(doc, FixedExtractor(facts), "prompt")
        assert [f.description for f in result.facts] == ["f1", "f2"]

    def test_fact_without_entities_dropped(self):
        doc = Document("d1", "t", "body")
        facts = [make_fact("keep", "A"), Fact("drop", []), Fact("drop2", [EntitySpec(" ")])]
        result = extract_hyperedges(doc, FixedExtractor(facts), "p")
        assert [f.description for f in result.facts] == ["keep"]

    def test_empty_body_rejected(self):
        with pytest.raises(PreconditionError):
            Document("d1", "t", "   ")

    def test_entity_names_normalized(self):
        doc = Document("d1", "t", "body")
        facts = [make_fact("f", "  Spike   Wave ")]
        result = extract_hyperedges(doc, FixedExtractor(facts), "p")
        assert result.facts[0].entities[0].name == "Spike Wave"

    def test_rule_based_sentence_heuristic(self):
        doc = Document(
            "d1",
            "t",
            "Valproate treats Epilepsy. lowercase sentence stays out. "
            "Single Capitalized here? no.",
        )
        result = RuleBasedExtractor().extract(doc, "p")
        assert len(result.facts) == 1
        names = [e.name for e in result.facts[0].entities]
        assert names == ["Valproate", "Epilepsy"]

    def test_rule_based_groups_capitalized_phrases(self):
        doc = Document("d1", "t", "Temporal Lobe Epilepsy often follows Febrile Seizures.")
        result = RuleBasedExtractor().extract(doc, "p")
        names = [e.name for e in result.facts[0].entities]
        assert names == ["Temporal Lobe Epilepsy", "Febrile Seizures"]

    def test_transport_failure_carries_document_id(self):
        from eegrag.errors import TransportError

        class FlakyExtractor:
            def extract(self, doc, prompt):
                raise TransportError("connection reset")

        doc = Document("doc-42", "t", "body")
        with pytest.raises(TransportError, match="doc-42"):
            extract_hyperedges(doc, FlakyExtractor(), "p")

    def test_sidecar_takes_precedence(self, tmp_path):
        sidecar_file = tmp_path / "facts.jsonl"
        sidecar_file.write_text(
            '{"doc_id": "d1", "description": "curated", '
            '"entities": [{"name": "X", "etype": "t", "definition": "d"}]}\n'
        )
        sidecar = load_fact_sidecar(sidecar_file)
        doc = Document("d1", "t", "Valproate treats Epilepsy.")
        result = RuleBasedExtractor(sidecar).extract(doc, "p")
        assert [f.description for f in result.facts] == ["curated"]


class TestBuildKgh:
    def test_zero_documents(self):
        store = BipartiteStore(embedding_dim=32)
        report = build_kgh([], FixedExtractor([]), EMB, store, prompt="p")
        assert report.to_dict() == {
            "documents": 0,
            "facts_dropped": 0,
            "entities_added": 0,
            "entities_merged": 0,
            "hyperedges_added": 0,
            "hyperedges_merged": 0,
        }
        assert not store.entities and not store.hyperedges

    def test_counts_one_fact_three_entities(self):
        store = BipartiteStore(embedding_dim=32)
        doc = Document("d1", "t", "body")
        report = build_kgh([doc], FixedExtractor([make_fact("f", "A", "B", "C")]), EMB, store, prompt="p")
        assert report.entities_added == 3
        assert report.hyperedges_added == 1
        assert report.entities_merged == 0

    def test_every_edge_is_knowledge_layer_with_embedding(self):
        store = BipartiteStore(embedding_dim=32)
        doc = Document("d1", "t", "body")
        build_kgh([doc], FixedExtractor([make_fact("f", "A", "B")]), EMB, store, prompt="p")
        for edge in store.hyperedges.values():
            assert edge.layer == "knowledge"
            assert edge.embedding is not None
        for ent in store.entities.values():
            assert ent.embedding is not None

    def test_no_orphan_entities(self):
        store = BipartiteStore(embedding_dim=32)
        docs = [Document("d1", "t", "body"), Document("d2", "t", "body")]
        build_kgh(docs, FixedExtractor([make_fact("f", "A", "B")]), EMB, store, prompt="p")
        for eid in store.entities:
            assert store.incident_hyperedges(eid)

    def test_reingest_merges_everything(self, tmp_path, corpus_dir):
        docs = load_documents(corpus_dir / "docs.jsonl")
        sidecar = load_fact_sidecar(corpus_dir / "docs.facts.jsonl")
        extractor = RuleBasedExtractor(sidecar)

        store = BipartiteStore(embedding_dim=32)
        first = build_kgh(docs, extractor, EMB, store, prompt="p")
        store.save(tmp_path / "a")
        second = build_kgh(docs, extractor, EMB, store, prompt="p")
        store.save(tmp_path / "b")

        assert first.entities_added > 0 and first.hyperedges_added > 0
        assert second.entities_added == 0 and second.hyperedges_added == 0
        assert second.entities_merged > 0
        assert second.hyperedges_merged == first.hyperedges_added
        for name in ("entities.jsonl", "hyperedges.jsonl", "meta.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_deterministic_build_independent_of_doc_order(self, tmp_path, corpus_dir):
        docs = load_documents(corpus_dir / "docs.jsonl")
        sidecar = load_fact_sidecar(corpus_dir / "docs.facts.jsonl")
        extractor = RuleBasedExtractor(sidecar)

        store_a = BipartiteStore(embedding_dim=32)
        build_kgh(docs, extractor, EMB, store_a, prompt="p")
        store_a.save(tmp_path / "a")
        store_b = BipartiteStore(embedding_dim=32)
        build_kgh(list(reversed(docs)), extractor, EMB, store_b, prompt="p")
        store_b.save(tmp_path / "b")
        for name in ("entities.jsonl", "hyperedges.jsonl", "meta.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_sealed_store_rejected(self):
        store = BipartiteStore(embedding_dim=32)
        store.seal()
        with pytest.raises(PreconditionError):
            build_kgh([], FixedExtractor([]), EMB, store, prompt="p")


class TestLoadDocuments:
    def test_malformed_line_names_line_number(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        path.write_text('{"id": "d1", "title": "t", "body": "ok"}\nnot json\n')
        with pytest.raises(PreconditionError, match="line 2"):
            load_documents(path)

    def test_missing_body_names_line_number(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        path.write_text('{"id": "d1", "title": "t"}\n')
        with pytest.raises(PreconditionError, match="line 1"):
            load_documents(path)
