"""EEG vector database: PAA compression, DTW distance, top-K retrieval.

Recordings are compressed channel-by-channel with Piecewise Aggregate
Approximation (Keogh et al., 2001) after per-channel z-scoring, and the
per-channel segment means are concatenated into one vector. Similarity
search runs Dynamic Time Warping over those compressed vectors against
every stored entry (exhaustive scan; exact at desk scale).

Raw EDF/BDF parsing is out of scope; recordings enter as JSON files shaped

    {"id": "rec-001", "patient_hash": "ab12...", "sample_rate": 256.0,
     "channels": [{"name": "Fp1", "samples": [..]}, ...]}

with every channel carrying the same number of finite samples.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ComparabilityError,
    NotFoundError,
    PreconditionError,
    StoreSealedError,
)

logger = logging.getLogger(__name__)

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without the extra
    _HAVE_NUMBA = False


# -- recordings ---------------------------------------------------------------


@dataclass
class Channel:
    name: str
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)


@dataclass
class EegRecording:
    """A multichannel recording: C channels over T samples each."""

    id: str
    sample_rate: float
    channels: list[Channel]
    patient_hash: str | None = None

    def __post_init__(self):
        if not self.id:
            raise PreconditionError("recording id must be non-empty")
        if not self.channels:
            raise PreconditionError("recording must have at least one channel")
        lengths = {ch.samples.shape[0] for ch in self.channels}
        if len(lengths) != 1:
            raise PreconditionError(f"channels have differing lengths: {sorted(lengths)}")
        if 0 in lengths:
            raise PreconditionError("channels must have at least one sample")
        for ch in self.channels:
            if not np.all(np.isfinite(ch.samples)):
                raise PreconditionError(f"channel {ch.name!r} contains non-finite samples")

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @property
    def n_samples(self) -> int:
        return self.channels[0].samples.shape[0]

    @property
    def channel_names(self) -> list[str]:
        return [ch.name for ch in self.channels]


def recording_from_dict(obj: dict) -> EegRecording:
    try:
        channels = [Channel(ch["name"], ch["samples"]) for ch in obj["channels"]]
        return EegRecording(
            id=obj["id"],
            sample_rate=float(obj["sample_rate"]),
            channels=channels,
            patient_hash=obj.get("patient_hash"),
        )
    except (KeyError, TypeError) as exc:
        raise PreconditionError(f"malformed recording object: {exc}") from exc


def load_recording(path: str | Path) -> EegRecording:
    with open(path, encoding="utf-8") as fh:
        return recording_from_dict(json.load(fh))


def convert_edf(path: str | Path) -> EegRecording:
    """Placeholder for clinical-format ingestion.

    Convert EDF/BDF files offline with your tool of choice and emit the JSON
    documented in the module docstring; this package only reads that JSON.
    """
    raise NotImplementedError(
        "EDF/BDF parsing is not bundled; convert recordings to the JSON layout "
        "described in eegrag.eeg and ingest those files instead"
    )


# -- piecewise aggregate approximation ----------------------------------------


def paa(series, n: int) -> np.ndarray:
    """Compress a series of length T into n segment means.

    Segment j covers the real interval [j*T/n, (j+1)*T/n); each sample
    contributes to a segment proportionally to its overlap with that
    interval, so T need not be divisible by n and n may exceed T (samples
    are then replicated proportionally). The segment-length-weighted mean
    of the output equals the input mean.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1:
        raise PreconditionError("paa expects a 1-D series")
    if x.size == 0:
        raise PreconditionError("paa input must be non-empty")
    if n < 1:
        raise PreconditionError("segment count must be >= 1")
    t = x.size
    out = np.empty(n, dtype=np.float64)
    for j in range(n):
        a = j * t / n
        b = (j + 1) * t / n
        i0 = min(int(math.floor(a)), t - 1)
        i1 = min(int(math.ceil(b)), t)
        idx = np.arange(i0, i1, dtype=np.float64)
        weights = np.minimum(b, idx + 1.0) - np.maximum(a, idx)
        weights = np.clip(weights, 0.0, None)
        out[j] = float(np.dot(weights, x[i0:i1]) / weights.sum())
    return out


def zscore(series) -> np.ndarray:
    """Center and scale a channel; a flat channel (std < 1e-12) becomes zeros."""
    x = np.asarray(series, dtype=np.float64)
    std = float(x.std())
    if std < 1e-12:
        return np.zeros_like(x)
    return (x - x.mean()) / std


@dataclass
class PaaEmbedding:
    """Channel-major concatenation of per-channel PAA vectors (length C*n)."""

    segments_per_channel: int
    values: np.ndarray
    channel_order: list[str]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        expected = self.segments_per_channel * len(self.channel_order)
        if self.values.shape != (expected,):
            raise PreconditionError(
                f"embedding has {self.values.shape[0]} values, expected "
                f"{len(self.channel_order)} channels x {self.segments_per_channel} segments"
            )

    @property
    def n_channels(self) -> int:
        return len(self.channel_order)

    def channel_blocks(self) -> np.ndarray:
        return self.values.reshape(self.n_channels, self.segments_per_channel)


def eeg_embed(rec: EegRecording, n: int, normalize: bool = True) -> PaaEmbedding:
    """Per-channel z-score (optional, default on), PAA, then concatenation.

    Z-scoring makes the embedding exactly invariant to per-channel gain and
    offset, which otherwise dominate DTW distances between electrodes.
    """
    blocks = []
    for ch in rec.channels:
        samples = zscore(ch.samples) if normalize else ch.samples
        blocks.append(paa(samples, n))
    return PaaEmbedding(
        segments_per_channel=n,
        values=np.concatenate(blocks),
        channel_order=rec.channel_names,
    )


# -- dynamic time warping ------------------------------------------------------


def _dtw_python(a: np.ndarray, b: np.ndarray, w: int) -> float:
    n, m = a.shape[0], b.shape[0]
    inf = math.inf
    prev = [inf] * (m + 1)
    prev[0] = 0.0
    for i in range(1, n + 1):
        cur = [inf] * (m + 1)
        lo = max(1, i - w)
        hi = min(m, i + w)
        ai = a[i - 1]
        for j in range(lo, hi + 1):
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = abs(ai - b[j - 1]) + best
        prev = cur
    return prev[m]


if _HAVE_NUMBA:

    @njit(cache=True)
    def _dtw_numba(a, b, w):  # pragma: no cover - thin compiled twin of _dtw_python
        n = a.shape[0]
        m = b.shape[0]
        inf = np.inf
        prev = np.full(m + 1, inf)
        prev[0] = 0.0
        cur = np.empty(m + 1)
        for i in range(1, n + 1):
            for j in range(m + 1):
                cur[j] = inf
            lo = max(1, i - w)
            hi = min(m, i + w)
            ai = a[i - 1]
            for j in range(lo, hi + 1):
                best = prev[j - 1]
                if prev[j] < best:
                    best = prev[j]
                if cur[j - 1] < best:
                    best = cur[j - 1]
                cur[j] = abs(ai - b[j - 1]) + best
            for j in range(m + 1):
                prev[j] = cur[j]
        return prev[m]


def dtw(a, b, band: int | None = None) -> float:
    """Classic DTW distance with |a_i - b_j| local cost.

    Allowed steps are (i-1,j), (i,j-1), (i-1,j-1) (Sakoe & Chiba, 1978).
    ``band`` restricts the warping path to |i - j| <= band; it is widened to
    |len(a) - len(b)| when narrower, since no path exists below that.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise PreconditionError("dtw inputs must be non-empty")
    if band is not None and band < 0:
        raise PreconditionError("band width must be >= 0")
    w = max(a.size, b.size) if band is None else max(band, abs(a.size - b.size))
    if _HAVE_NUMBA:
        return float(_dtw_numba(a, b, w))
    return float(_dtw_python(a, b, w))


# -- the vector database -------------------------------------------------------


@dataclass
class EvdEntry:
    """Stored recording metadata plus its compressed embedding."""

    id: str
    patient_hash: str | None
    sample_rate: float
    embedding: PaaEmbedding


@dataclass
class EegMatch:
    recording_id: str
    patient_hash: str | None
    distance: float
    rank: int


@dataclass
class EegVectorDatabase:
    """Exhaustive DTW search over PAA-compressed recordings.

    Build phase is single-writer; ``seal()`` freezes the database, computes
    the per-patient fused vectors, and enables retrieval. ``channel_blocked``
    switches DTW from one pass over the whole concatenated vector to one
    pass per channel block with the distances summed, which forbids warping
    across channel boundaries.
    """

    n_segments: int = 20
    normalize: bool = True
    band: int | None = None
    channel_blocked: bool = False
    entries: dict[str, EvdEntry] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_segments < 1:
            raise PreconditionError("n_segments must be >= 1")
        self._sealed = False
        self._patient_fused: dict[str, np.ndarray] = {}

    @property
    def sealed(self) -> bool:
        return self._sealed

    def __len__(self) -> int:
        return len(self.entries)

    def insert_recording(self, rec: EegRecording) -> str:
        if self._sealed:
            raise StoreSealedError("EEG database is sealed")
        if rec.id in self.entries:
            raise PreconditionError(f"duplicate recording id {rec.id!r}")
        emb = eeg_embed(rec, self.n_segments, normalize=self.normalize)
        self.entries[rec.id] = EvdEntry(rec.id, rec.patient_hash, rec.sample_rate, emb)
        return rec.id

    def get(self, recording_id: str) -> EvdEntry:
        try:
            return self.entries[recording_id]
        except KeyError:
            raise NotFoundError(f"unknown recording id {recording_id!r}") from None

    def seal(self) -> None:
        self._patient_fused = self._fuse_patients()
        self._sealed = True

    def _fuse_patients(self) -> dict[str, np.ndarray]:
        """Element-wise mean of each patient's embeddings (order-invariant).

        Fusion needs a uniform channel count per patient; patients whose
        recordings disagree are skipped with a warning rather than failing
        the build.
        """
        groups: dict[str, list[EvdEntry]] = {}
        for rid in sorted(self.entries):
            entry = self.entries[rid]
            if entry.patient_hash:
                groups.setdefault(entry.patient_hash, []).append(entry)
        fused = {}
        for patient, group in groups.items():
            shapes = {e.embedding.values.shape[0] for e in group}
            if len(shapes) != 1:
                logger.warning(
                    "patient %s has recordings with differing channel counts; skipping fusion",
                    patient,
                )
                continue
            fused[patient] = np.mean([e.embedding.values for e in group], axis=0)
        return fused

    def patient_embedding(self, patient_hash: str) -> np.ndarray | None:
        """The fused per-patient vector, available once the database is sealed."""
        return self._patient_fused.get(patient_hash)

    def _distance(self, query: PaaEmbedding, entry: PaaEmbedding) -> float:
        if self.channel_blocked:
            qb = query.channel_blocks()
            eb = entry.channel_blocks()
            return float(sum(dtw(qb[c], eb[c], band=self.band) for c in range(qb.shape[0])))
        return dtw(query.values, entry.values, band=self.band)

    def retrieve_by_embedding(self, query: PaaEmbedding, k: int) -> list[EegMatch]:
        if not self._sealed:
            raise PreconditionError("seal the database before retrieval")
        if k < 1:
            raise PreconditionError("k must be >= 1")
        if not self.entries:
            return []
        mismatched = sorted(
            rid
            for rid, e in self.entries.items()
            if e.embedding.n_channels != query.n_channels
        )
        if mismatched:
            raise ComparabilityError(
                f"query has {query.n_channels} channels; incompatible stored "
                f"recordings: {mismatched}"
            )
        scored = sorted(
            ((self._distance(query, e.embedding), rid) for rid, e in self.entries.items()),
        )
        return [
            EegMatch(rid, self.entries[rid].patient_hash, dist, rank)
            for rank, (dist, rid) in enumerate(scored[:k], start=1)
        ]

    def retrieve(self, query: EegRecording, k: int) -> list[EegMatch]:
        """Top-K stored recordings by ascending DTW distance (ties by id)."""
        emb = eeg_embed(query, self.n_segments, normalize=self.normalize)
        return self.retrieve_by_embedding(emb, k)

    # -- persistence ---------------------------------------------------------

    def save(self, path: str | Path) -> None:
        """One JSON object per entry, sorted by recording id (``evd.jsonl``)."""
        with open(path, "w", encoding="utf-8") as fh:
            for rid in sorted(self.entries):
                e = self.entries[rid]
                row = {
                    "id": e.id,
                    "patient_hash": e.patient_hash,
                    "sample_rate": e.sample_rate,
                    "n_segments": e.embedding.segments_per_channel,
                    "normalized": self.normalize,
                    "channel_order": e.embedding.channel_order,
                    "values": e.embedding.values.tolist(),
                }
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")

    @classmethod
    def load(
        cls,
        path: str | Path,
        band: int | None = None,
        channel_blocked: bool = False,
    ) -> "EegVectorDatabase":
        """Load persisted embeddings; n_segments/normalize are adopted from the file."""
        rows = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rows.append(json.loads(line))
        if rows:
            n_set = {r["n_segments"] for r in rows}
            norm_set = {r["normalized"] for r in rows}
            if len(n_set) != 1 or len(norm_set) != 1:
                raise PreconditionError("inconsistent n_segments/normalized flags in database file")
            db = cls(
                n_segments=rows[0]["n_segments"],
                normalize=rows[0]["normalized"],
                band=band,
                channel_blocked=channel_blocked,
            )
        else:
            db = cls(band=band, channel_blocked=channel_blocked)
        for r in rows:
            emb = PaaEmbedding(r["n_segments"], np.asarray(r["values"]), r["channel_order"])
            db.entries[r["id"]] = EvdEntry(r["id"], r["patient_hash"], r["sample_rate"], emb)
        return db
