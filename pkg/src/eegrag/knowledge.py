"""Knowledge-layer construction: documents in, embedded hyperedges out.

Fact extraction is delegated to a pluggable extractor (an LLM in
production); the bundled rule-based extractor keeps builds reproducible by
reading curated facts from a sidecar file when one exists and otherwise
falling back to a crude capitalized-term heuristic.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Protocol, runtime_checkable

from .embedding import Embedder
from .errors import PreconditionError, TransportError
from .hashing import collapse_whitespace
from .hypergraph import KNOWLEDGE_LAYER, BipartiteStore

logger = logging.getLogger(__name__)


@dataclass
class Document:
    id: str
    title: str
    body: str
    source: str = ""

    def __post_init__(self):
        if not self.body or not self.body.strip():
            raise PreconditionError(f"document {self.id!r} has an empty body")


@dataclass
class EntitySpec:
    name: str
    etype: str = ""
    definition: str = ""


@dataclass
class Fact:
    """One extracted n-ary relation: a description over named entities."""

    description: str
    entities: list[EntitySpec]


@dataclass
class ExtractionResult:
    facts: list[Fact] = field(default_factory=list)


@runtime_checkable
class Extractor(Protocol):
    """Turns a document plus an extraction prompt into candidate facts.

    Remote implementations may be nondeterministic and are excluded from
    golden tests; the bundled rule-based extractor is deterministic.
    """

    def extract(self, doc: Document, prompt: str) -> ExtractionResult: ...


def load_extraction_prompt() -> str:
    """The versioned extraction prompt asset (an interface to remote extractors)."""
    return resources.files("eegrag.prompts").joinpath("extraction.txt").read_text("utf-8")


def load_fact_sidecar(path: str | Path) -> dict[str, list[Fact]]:
    """Read curated facts keyed by document id from a ``*.facts.jsonl`` file."""
    sidecar: dict[str, list[Fact]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                fact = Fact(
                    description=row["description"],
                    entities=[
                        EntitySpec(e["name"], e.get("etype", ""), e.get("definition", ""))
                        for e in row["entities"]
                    ],
                )
                sidecar.setdefault(row["doc_id"], []).append(fact)
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise PreconditionError(f"{path}: line {lineno}: {exc}") from exc
    return sidecar


_SENTENCE_SPLIT = re.compile(r"[.!?]+\s*")
_CAP_TERM = re.compile(r"\b[A-Z][A-Za-z0-9-]+(?:\s+[A-Z][A-Za-z0-9-]+)*")


class RuleBasedExtractor:
    """Deterministic extractor for offline builds and tests.

    Documents present in the sidecar mapping yield exactly their curated
    facts. For the rest, every sentence containing at least two distinct
    capitalized terms becomes one fact whose entities are those terms.
    """

    def __init__(self, sidecar: dict[str, list[Fact]] | None = None):
        self.sidecar = sidecar or {}

    def extract(self, doc: Document, prompt: str) -> ExtractionResult:
        if doc.id in self.sidecar:
            return ExtractionResult(facts=list(self.sidecar[doc.id]))
        facts = []
        for sentence in _SENTENCE_SPLIT.split(doc.body):
            sentence = sentence.strip()
            if not sentence:
                continue
            terms = []
            for term in _CAP_TERM.findall(sentence):
                if term not in terms:
                    terms.append(term)
            if len(terms) >= 2:
                facts.append(
                    Fact(sentence, [EntitySpec(t, etype="term") for t in terms])
                )
        return ExtractionResult(facts=facts)


def _validate_facts(raw: ExtractionResult, doc_id: str) -> tuple[ExtractionResult, int]:
    """Drop degenerate facts and normalize entity names; returns (result, dropped)."""
    kept = []
    for fact in raw.facts:
        entities = [
            EntitySpec(collapse_whitespace(e.name), e.etype, e.definition)
            for e in fact.entities
            if e.name and e.name.strip()
        ]
        if not entities or not fact.description.strip():
            logger.info("dropping degenerate fact from document %s: %r", doc_id, fact.description)
            continue
        kept.append(Fact(fact.description, entities))
    return ExtractionResult(facts=kept), len(raw.facts) - len(kept)


def _extract_with_provenance(doc: Document, extractor: Extractor, prompt: str) -> ExtractionResult:
    try:
        return extractor.extract(doc, prompt)
    except TransportError as exc:
        raise TransportError(
            f"extraction failed for document {doc.id!r}: {exc}", retryable=exc.retryable
        ) from exc


def extract_hyperedges(doc: Document, extractor: Extractor, prompt: str) -> ExtractionResult:
    """Run the extractor and validate its output.

    Facts with an empty description or no surviving entities are dropped
    (logged, not fatal); entity names are whitespace-normalized. Extractor
    transport failures are re-raised carrying the document id.
    """
    if not doc.body.strip():
        raise PreconditionError(f"document {doc.id!r} has an empty body")
    validated, _ = _validate_facts(_extract_with_provenance(doc, extractor, prompt), doc.id)
    return validated


@dataclass
class IngestReport:
    documents: int = 0
    facts_dropped: int = 0
    entities_added: int = 0
    entities_merged: int = 0
    hyperedges_added: int = 0
    hyperedges_merged: int = 0

    def to_dict(self) -> dict:
        return dict(vars(self))


def build_kgh(
    docs: list[Document],
    extractor: Extractor,
    embedder: Embedder,
    store: BipartiteStore,
    prompt: str | None = None,
) -> IngestReport:
    """Ingest documents into the knowledge layer of ``store``.

    Every surviving fact becomes a knowledge-layer hyperedge with an
    embedded description; every entity is registered (or merged) with an
    embedding of its name plus definition. Documents are processed in id
    order so the build is deterministic regardless of input order.
    """
    if store.sealed:
        raise PreconditionError("cannot ingest into a sealed store")
    if prompt is None:
        prompt = load_extraction_prompt()
    report = IngestReport()
    for doc in sorted(docs, key=lambda d: d.id):
        report.documents += 1
        validated, dropped = _validate_facts(
            _extract_with_provenance(doc, extractor, prompt), doc.id
        )
        report.facts_dropped += dropped
        for fact in validated.facts:
            member_ids = set()
            for spec in fact.entities:
                before = len(store.entities)
                eid = store.add_entity(
                    spec.name,
                    spec.etype,
                    spec.definition,
                    embedding=embedder.embed(f"{spec.name} {spec.definition}".strip()),
                )
                member_ids.add(eid)
                if len(store.entities) > before:
                    report.entities_added += 1
                else:
                    report.entities_merged += 1
            before = len(store.hyperedges)
            store.add_hyperedge(
                fact.description,
                member_ids,
                layer=KNOWLEDGE_LAYER,
                embedding=embedder.embed(fact.description),
            )
            if len(store.hyperedges) > before:
                report.hyperedges_added += 1
            else:
                report.hyperedges_merged += 1
    return report


def load_documents(path: str | Path) -> list[Document]:
    """Read ``docs.jsonl`` (id, title, body, source), one document per line."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                docs.append(
                    Document(row["id"], row.get("title", ""), row["body"], row.get("source", ""))
                )
            except (KeyError, TypeError, json.JSONDecodeError, PreconditionError) as exc:
                raise PreconditionError(f"{path}: line {lineno}: {exc}") from exc
    return docs
