"""
PAA compression and DTW similarity on EEG-like signals
======================================================

Raw recordings are too long to compare directly, so each channel is
z-scored and compressed to n segment means (PAA). Similarity search then
runs Dynamic Time Warping over the compressed vectors: DTW tolerates the
small temporal misalignments that defeat plain Euclidean distance.
"""

import numpy as np

from eegrag import EegVectorDatabase, dtw, eeg_embed, paa
from eegrag.eeg import Channel, EegRecording

# --- PAA keeps coarse shape -------------------------------------------------

t = np.arange(512) / 256.0
slow_wave = np.sin(2 * np.pi * 3.0 * t)  # 3 Hz, epilepsy-like

compressed = paa(slow_wave, 20)
print("raw length:", slow_wave.size, "-> compressed:", compressed.size)
print("first segments:", np.round(compressed[:6], 3))

# Segment boundaries are fractional, so any (T, n) pair works and the
# length-weighted mean is preserved exactly.
print("mean preserved:", abs(paa(slow_wave, 7).mean() - slow_wave.mean()) < 1e-9)

# --- DTW absorbs temporal misalignment ---------------------------------------

shifted = np.sin(2 * np.pi * 3.0 * (t + 0.040))  # 40 ms phase shift
euclid = float(np.abs(paa(slow_wave, 20) - paa(shifted, 20)).sum())
warped = dtw(paa(slow_wave, 20), paa(shifted, 20))
print(f"\nshifted copy:  L1 = {euclid:.3f}   DTW = {warped:.3f}  (DTW forgives the shift)")

fast_wave = np.sin(2 * np.pi * 12.0 * t)
print(f"different rhythm: DTW = {dtw(paa(slow_wave, 20), paa(fast_wave, 20)):.3f}")

# --- top-K retrieval over a small database ------------------------------------

rng = np.random.default_rng(7)


def recording(rid: str, freq: float) -> EegRecording:
    wave = np.sin(2 * np.pi * freq * t) + 0.1 * rng.standard_normal(t.size)
    return EegRecording(rid, 256.0, [Channel("C3", wave), Channel("C4", 0.8 * wave)])


db = EegVectorDatabase(n_segments=20)
for rid, freq in [("slow-a", 3.0), ("slow-b", 3.2), ("alpha", 10.0), ("beta", 21.0)]:
    db.insert_recording(recording(rid, freq))
db.seal()

query = recording("query", 3.05)
print("\nnearest stored recordings for a 3.05 Hz query:")
for match in db.retrieve(query, 3):
    print(f"  #{match.rank} {match.recording_id:7s} dtw={match.distance:.3f}")
