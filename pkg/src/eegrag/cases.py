"""Patient case store: canonical attribute tuples, hashed ids, pseudo-cases.

Each patient record is serialized into a sorted ``name=value;...`` tuple,
assigned a content hash, and embedded as one unit of text so cases live in
the same semantic space as knowledge hyperedges. Incomplete records are
compensated with synthetic pseudo-cases that copy missing attributes from
the most similar complete neighbor; real cases are never mutated.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embedding import Embedder
from .errors import NotFoundError, PreconditionError, StoreSealedError
from .hashing import collapse_whitespace, fnv1a64_text

logger = logging.getLogger(__name__)

SYNTHETIC_SUFFIX = "-s"


@dataclass
class PatientRecord:
    """Raw attribute mapping; each attribute carries one or more text values."""

    attributes: dict[str, list[str]]
    eeg_refs: list[str] = field(default_factory=list)

    @classmethod
    def from_raw(cls, obj: dict) -> "PatientRecord":
        """Build from a free-form JSON object; ``eeg_refs`` is reserved."""
        attrs: dict[str, list[str]] = {}
        refs: list[str] = []
        for key, value in obj.items():
            if key == "eeg_refs":
                refs = [str(v) for v in value]
            elif isinstance(value, list):
                attrs[str(key)] = [str(v) for v in value]
            else:
                attrs[str(key)] = [str(value)]
        return cls(attributes=attrs, eeg_refs=refs)


def serialize_case(record: PatientRecord | dict[str, list[str]]) -> str:
    """Canonical rendering: attributes sorted by name, values cleaned.

    Values are trimmed with internal whitespace collapsed; multi-valued
    attributes keep their input order, joined by commas.
    """
    attrs = record.attributes if isinstance(record, PatientRecord) else record
    if not attrs:
        raise PreconditionError("patient record must have at least one attribute")
    parts = []
    for name in sorted(attrs):
        values = ",".join(collapse_whitespace(v) for v in attrs[name])
        parts.append(f"{collapse_whitespace(name)}={values}")
    return ";".join(parts)


def case_id(canonical: str) -> str:
    """Stable case hash: lowercase hex of the 64-bit FNV-1a of the rendering."""
    return f"{fnv1a64_text(canonical):016x}"


def embed_case(case_hash: str, canonical: str, embedder: Embedder) -> np.ndarray:
    """Embed the identifier and attribute tuple as one concatenated text."""
    return embedder.embed(f"{case_hash} | {canonical}")


@dataclass
class PatientCase:
    h: str
    attributes: dict[str, list[str]]
    embedding: np.ndarray
    synthetic: bool = False
    eeg_refs: list[str] = field(default_factory=list)

    @property
    def canonical(self) -> str:
        return serialize_case(self.attributes)


@dataclass
class FillRecord:
    recipient: str
    donor: str
    attributes: list[str]
    similarity: float
    synthetic_hash: str


@dataclass
class AugmentationReport:
    fills: list[FillRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.fills)


class CaseStore:
    """Case hyperedges keyed by hash, with an attribute-name inverted index."""

    def __init__(self):
        self.cases: dict[str, PatientCase] = {}
        self.attribute_index: dict[str, set[str]] = {}
        self._sealed = False

    @property
    def sealed(self) -> bool:
        return self._sealed

    def seal(self) -> None:
        self._sealed = True

    def __len__(self) -> int:
        return len(self.cases)

    def add_record(self, record: PatientRecord, embedder: Embedder) -> str:
        """Serialize, hash, embed, and store a real case (idempotent by content)."""
        if self._sealed:
            raise StoreSealedError("case store is sealed")
        canonical = serialize_case(record)
        h = case_id(canonical)
        if h not in self.cases:
            attrs = {
                collapse_whitespace(k): [collapse_whitespace(v) for v in vs]
                for k, vs in record.attributes.items()
            }
            self._insert(
                PatientCase(
                    h=h,
                    attributes=attrs,
                    embedding=embed_case(h, canonical, embedder),
                    synthetic=False,
                    eeg_refs=list(record.eeg_refs),
                )
            )
        return h

    def _insert(self, case: PatientCase) -> None:
        self.cases[case.h] = case
        for name in case.attributes:
            self.attribute_index.setdefault(name, set()).add(case.h)

    def get(self, h: str) -> PatientCase:
        try:
            return self.cases[h]
        except KeyError:
            raise NotFoundError(f"unknown case hash {h!r}") from None

    def real_cases(self) -> list[PatientCase]:
        return [self.cases[h] for h in sorted(self.cases) if not self.cases[h].synthetic]

    # -- persistence ---------------------------------------------------------

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for h in sorted(self.cases):
                case = self.cases[h]
                row = {
                    "h": case.h,
                    "e": {k: case.attributes[k] for k in sorted(case.attributes)},
                    "embedding": case.embedding.tolist(),
                    "synthetic": case.synthetic,
                    "eeg_refs": case.eeg_refs,
                }
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "CaseStore":
        store = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                row = json.loads(line)
                store._insert(
                    PatientCase(
                        h=row["h"],
                        attributes={k: list(v) for k, v in row["e"].items()},
                        embedding=np.asarray(row["embedding"]),
                        synthetic=row["synthetic"],
                        eeg_refs=list(row.get("eeg_refs", [])),
                    )
                )
        return store


def augment_pseudo_cases(
    store: CaseStore,
    embedder: Embedder,
    tau: float = 0.80,
    max_fills: int | None = None,
) -> AugmentationReport:
    """Create synthetic pseudo-cases for records missing prevalent attributes.

    An attribute counts as missing when at least half of the real cases have
    it and this case does not. For each such case the nearest other real
    case by cosine similarity donates its values, provided the similarity
    reaches ``tau``; the result is stored as a new synthetic case (hash of
    the new tuple plus a synthetic marker suffix). ``max_fills`` caps how
    many attributes one pseudo-case may take from its donor.

    Real cases are never mutated or deleted.
    """
    if store.sealed:
        raise StoreSealedError("case store is sealed")
    if not 0.0 < tau <= 1.0:
        raise PreconditionError("tau must be in (0, 1]")
    real = store.real_cases()
    if len(real) < 2:
        raise PreconditionError("augmentation needs at least 2 cases")

    threshold = len(real) / 2.0
    prevalent = sorted(
        name
        for name in store.attribute_index
        if sum(1 for c in real if name in c.attributes) >= threshold
    )

    report = AugmentationReport()
    for case in real:
        missing = [a for a in prevalent if a not in case.attributes]
        if not missing:
            continue
        # embeddings are unit-norm, so the dot product is cosine; real cases
        # iterate in ascending hash order, so the first occurrence of the
        # best similarity wins ties deterministically
        best: tuple[float, str] | None = None
        for other in real:
            if other.h == case.h:
                continue
            sim = float(np.dot(case.embedding, other.embedding))
            if best is None or sim > best[0]:
                best = (sim, other.h)
        if best is None or best[0] < tau:
            continue
        donor = store.cases[best[1]]
        fillable = [a for a in missing if a in donor.attributes]
        if max_fills is not None:
            fillable = fillable[:max_fills]
        if not fillable:
            continue
        new_attrs = {k: list(v) for k, v in case.attributes.items()}
        for a in fillable:
            new_attrs[a] = list(donor.attributes[a])
        canonical = serialize_case(new_attrs)
        synthetic_hash = case_id(canonical) + SYNTHETIC_SUFFIX
        if synthetic_hash in store.cases:
            continue
        store._insert(
            PatientCase(
                h=synthetic_hash,
                attributes=new_attrs,
                embedding=embed_case(synthetic_hash, canonical, embedder),
                synthetic=True,
                eeg_refs=list(case.eeg_refs),
            )
        )
        report.fills.append(
            FillRecord(case.h, donor.h, fillable, best[0], synthetic_hash)
        )
    return report


def load_records(path: str | Path) -> list[PatientRecord]:
    """Read ``cases.jsonl``: one JSON object of free attributes per patient."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                record = PatientRecord.from_raw(obj)
                if not record.attributes:
                    raise PreconditionError("record has no attributes")
                records.append(record)
            except (PreconditionError, json.JSONDecodeError, AttributeError) as exc:
                raise PreconditionError(f"{path}: line {lineno}: {exc}") from exc
    return records
