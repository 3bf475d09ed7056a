#!/usr/bin/env python3
"""Regenerate the bundled fixture corpus (fully synthetic, deterministic).

Writes docs.jsonl + docs.facts.jsonl, cases.jsonl, eeg/<id>.json, and
qa.jsonl under fixtures/corpus/. Case hashes are computed with the package
so recording patient hashes stay consistent with the case store.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from eegrag.cases import PatientRecord, case_id, serialize_case

ROOT = Path(__file__).parent / "corpus"

FS = 256.0
T = 512
CHANNELS = ["Fp1", "Fp2", "C3", "C4"]

DOCS = [
    {
        "id": "doc-01",
        "title": "Absence epilepsy patterns",
        "source": "guideline",
        "facts": [
            (
                "Generalized spike-wave discharge at 3 Hz accompanies absence seizure "
                "and supports a diagnosis of epilepsy.",
                [
                    ("spike-wave discharge", "waveform", "generalized 3 Hz spike-and-wave EEG pattern"),
                    ("absence seizure", "symptom", "brief staring spell with impaired awareness"),
                    ("epilepsy", "diagnosis", "disorder of recurrent unprovoked seizures"),
                ],
            ),
            (
                "Valproate is a first-line treatment for generalized epilepsy with absence seizure.",
                [
                    ("valproate", "treatment", "broad-spectrum antiseizure medication"),
                    ("epilepsy", "diagnosis", ""),
                    ("absence seizure", "symptom", ""),
                ],
            ),
        ],
    },
    {
        "id": "doc-02",
        "title": "EEG markers of depression",
        "source": "article",
        "facts": [
            (
                "Reduced alpha rhythm with frontal alpha asymmetry is associated with "
                "depression and anhedonia.",
                [
                    ("alpha rhythm", "waveform", "8-12 Hz posterior dominant rhythm"),
                    ("alpha asymmetry", "waveform", "left-right imbalance of frontal alpha power"),
                    ("depression", "diagnosis", "persistent low mood disorder"),
                    ("anhedonia", "symptom", "loss of pleasure or interest"),
                ],
            ),
            (
                "Sertraline improves anhedonia in moderate depression.",
                [
                    ("sertraline", "treatment", "selective serotonin reuptake inhibitor"),
                    ("anhedonia", "symptom", ""),
                    ("depression", "diagnosis", ""),
                ],
            ),
        ],
    },
    {
        "id": "doc-03",
        "title": "Beta activity in movement disorders",
        "source": "textbook",
        "facts": [
            (
                "Excessive beta oscillation correlates with tremor severity in Parkinson disease.",
                [
                    ("beta oscillation", "waveform", "13-30 Hz rhythm over sensorimotor cortex"),
                    ("tremor", "symptom", "involuntary rhythmic shaking"),
                    ("parkinson disease", "diagnosis", "progressive movement disorder"),
                ],
            ),
            (
                "Levodopa suppresses pathological beta oscillation and relieves tremor.",
                [
                    ("levodopa", "treatment", "dopamine precursor therapy"),
                    ("beta oscillation", "waveform", ""),
                    ("tremor", "symptom", ""),
                ],
            ),
        ],
    },
    {
        "id": "doc-04",
        "title": "Slowing in dementia",
        "source": "textbook",
        "facts": [
            (
                "Diffuse theta slowing with loss of the posterior alpha rhythm accompanies "
                "memory loss in Alzheimer disease.",
                [
                    ("theta slowing", "waveform", "excess 4-7 Hz background activity"),
                    ("alpha rhythm", "waveform", ""),
                    ("memory loss", "symptom", "decline of episodic recall"),
                    ("alzheimer disease", "diagnosis", "neurodegenerative dementia"),
                ],
            ),
        ],
    },
    {
        "id": "doc-05",
        "title": "Sleep spindles and deprivation",
        "source": "article",
        "facts": [
            (
                "Reduced sleep spindle density follows sleep deprivation and worsens insomnia.",
                [
                    ("sleep spindle", "waveform", "11-15 Hz burst of stage-2 sleep"),
                    ("sleep deprivation", "diagnosis", "chronically insufficient sleep"),
                    ("insomnia", "symptom", "difficulty initiating or maintaining sleep"),
                ],
            ),
        ],
    },
    {
        "id": "doc-06",
        "title": "Post-concussive EEG",
        "source": "guideline",
        "facts": [
            (
                "Focal delta slowing after head impact suggests mild traumatic brain injury "
                "with persistent headache.",
                [
                    ("delta slowing", "waveform", "focal 1-4 Hz slow activity"),
                    ("mild traumatic brain injury", "diagnosis", "concussion-spectrum head injury"),
                    ("headache", "symptom", "persistent head pain"),
                ],
            ),
        ],
    },
    {
        "id": "doc-07",
        "title": "Gamma findings in psychiatry",
        "source": "article",
        "facts": [
            (
                "Elevated resting gamma activity is reported alongside hallucination in "
                "psychiatric disorder.",
                [
                    ("gamma activity", "waveform", "activity above 30 Hz"),
                    ("hallucination", "symptom", "perception without external stimulus"),
                    ("psychiatric disorder", "diagnosis", "primary psychiatric illness"),
                ],
            ),
        ],
    },
    {
        "id": "doc-08",
        "title": "Normal variants",
        "source": "textbook",
        "facts": [
            (
                "The alpha rhythm attenuates with eye opening in healthy adults.",
                [("alpha rhythm", "waveform", "")],
            ),
        ],
    },
    {
        "id": "doc-09",
        "title": "Artifact pitfalls",
        "source": "guideline",
        "facts": [
            (
                "Spike-wave discharge can be mimicked by chewing artifact during drowsiness.",
                [
                    ("spike-wave discharge", "waveform", ""),
                    ("chewing artifact", "artifact", "rhythmic myogenic contamination"),
                ],
            ),
        ],
    },
    {
        "id": "doc-10",
        "title": "Differential slowing",
        "source": "article",
        "facts": [
            (
                "Theta slowing also appears in deep drowsiness, complicating Alzheimer "
                "disease screening.",
                [
                    ("theta slowing", "waveform", ""),
                    ("alzheimer disease", "diagnosis", ""),
                ],
            ),
        ],
    },
]

CASES = [
    {
        "age": "34",
        "sex": "F",
        "history": "childhood staring spells",
        "medication": "valproate",
        "symptoms": "absence seizure episodes",
        "diagnosis": "epilepsy",
        "_eeg": ["rec-001"],
    },
    {
        "age": "29",
        "sex": "M",
        "history": "low mood for six months",
        "medication": "sertraline",
        "symptoms": "anhedonia and insomnia",
        "diagnosis": "depression",
        "_eeg": ["rec-002"],
    },
    {
        "age": "67",
        "sex": "M",
        "history": "progressive tremor over three years",
        "medication": "levodopa",
        "symptoms": "tremor",
        "diagnosis": "parkinson disease",
        "_eeg": ["rec-003"],
    },
    {
        "age": "72",
        "sex": "F",
        "history": "two years of memory loss",
        "symptoms": "memory loss",
        "diagnosis": "alzheimer disease",
        "_eeg": ["rec-004"],
    },
    {
        "age": "41",
        "sex": "M",
        "history": "rotating shift work",
        "symptoms": "insomnia",
        "diagnosis": "sleep deprivation",
        "_eeg": ["rec-005"],
    },
    {
        "age": "23",
        "sex": "F",
        "history": "concussion one month ago",
        "medication": "none",
        "symptoms": "headache",
        "diagnosis": "mild traumatic brain injury",
        "_eeg": ["rec-006"],
    },
    {
        "age": "51",
        "sex": "F",
        "medication": "sertraline",
        "symptoms": "hallucination",
        "diagnosis": "psychiatric disorder",
        "_eeg": [],
    },
    {
        "age": "36",
        "sex": "F",
        "history": "childhood staring spells",
        "symptoms": "absence seizure episodes",
        "diagnosis": "epilepsy",
        "_eeg": [],
    },
]


def _signal(kind: str, rng: np.random.Generator) -> np.ndarray:
    t = np.arange(T) / FS
    noise = 0.15 * rng.standard_normal((len(CHANNELS), T))
    sig = np.zeros((len(CHANNELS), T))
    if kind == "spike-wave":
        burst = (np.mod(t * 3.0, 1.0) < 0.25).astype(float)
        sig[:] = 1.6 * burst * np.sin(2 * np.pi * 3.0 * t) + 0.3 * np.sin(2 * np.pi * 9.0 * t)
    elif kind == "alpha-asym":
        alpha = np.sin(2 * np.pi * 10.0 * t)
        sig[0] = 0.4 * alpha
        sig[1] = 1.2 * alpha
        sig[2] = 0.5 * alpha
        sig[3] = 1.0 * alpha
    elif kind == "beta":
        sig[:] = 0.9 * np.sin(2 * np.pi * 20.0 * t) + 0.2 * np.sin(2 * np.pi * 6.0 * t)
    elif kind == "theta":
        sig[:] = 1.1 * np.sin(2 * np.pi * 5.0 * t) + 0.2 * np.sin(2 * np.pi * 10.0 * t)
    elif kind == "spindle":
        envelope = np.exp(-(((np.mod(t, 1.0) - 0.5) / 0.12) ** 2))
        sig[:] = 0.9 * envelope * np.sin(2 * np.pi * 12.5 * t)
    elif kind == "delta-focal":
        delta = np.sin(2 * np.pi * 2.0 * t)
        sig[0] = 1.5 * delta
        sig[1] = 0.3 * delta
        sig[2] = 1.2 * delta
        sig[3] = 0.3 * delta
    return sig + noise


RECORDING_KINDS = {
    "rec-001": "spike-wave",
    "rec-002": "alpha-asym",
    "rec-003": "beta",
    "rec-004": "theta",
    "rec-005": "spindle",
    "rec-006": "delta-focal",
}

QA = [
    ("qa-01", "epilepsy", "doctor", "A 34 year old woman shows 3 Hz spike-wave discharge with brief staring spells. What is the likely diagnosis?", "rec-001", "epilepsy with absence seizure"),
    ("qa-02", "epilepsy", "intern", "Which medication is first line for generalized epilepsy with absence seizure?", None, "valproate"),
    ("qa-03", "depression", "doctor", "EEG shows frontal alpha asymmetry with reduced alpha rhythm and the patient reports anhedonia. What diagnosis fits?", "rec-002", "depression"),
    ("qa-04", "depression", "patient", "My EEG report mentions alpha asymmetry and I feel no pleasure in anything. What could this mean?", None, "mild depression"),
    ("qa-05", "parkinson", "researcher", "Which EEG rhythm correlates with tremor severity in parkinson disease?", "rec-003", "beta oscillation"),
    ("qa-06", "parkinson", "nurse", "A patient on levodopa asks what the drug does to their brain rhythms. What does levodopa suppress?", None, "beta oscillation"),
    ("qa-07", "alzheimer", "doctor", "An EEG with diffuse theta slowing and loss of alpha rhythm in a 72 year old with memory loss suggests what?", "rec-004", "alzheimer disease"),
    ("qa-08", "alzheimer", "intern", "What background change complicates alzheimer disease screening during drowsiness?", None, "theta slowing"),
    ("qa-09", "sleep", "researcher", "What happens to sleep spindle density after sleep deprivation?", "rec-005", "reduced sleep spindle density"),
    ("qa-10", "tbi", "doctor", "Focal delta slowing after a concussion with persistent headache points to what diagnosis?", "rec-006", "mild traumatic brain injury"),
    ("qa-11", "psychiatric", "nurse", "Elevated resting gamma activity with hallucination is reported in which condition?", None, "psychiatric disorder"),
    ("qa-12", "epilepsy", "patient", "Can chewing during drowsiness look like spike-wave discharge on my EEG?", None, "yes chewing artifact can mimic spike-wave discharge"),
]


def main() -> None:
    ROOT.mkdir(parents=True, exist_ok=True)
    (ROOT / "eeg").mkdir(exist_ok=True)

    with open(ROOT / "docs.jsonl", "w", encoding="utf-8") as fh:
        for doc in DOCS:
            body = " ".join(fact[0] for fact in doc["facts"])
            row = {"id": doc["id"], "title": doc["title"], "body": body, "source": doc["source"]}
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")

    with open(ROOT / "docs.facts.jsonl", "w", encoding="utf-8") as fh:
        for doc in DOCS:
            for description, entities in doc["facts"]:
                row = {
                    "doc_id": doc["id"],
                    "description": description,
                    "entities": [
                        {"name": n, "etype": t, "definition": d} for n, t, d in entities
                    ],
                }
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")

    case_hashes = []
    with open(ROOT / "cases.jsonl", "w", encoding="utf-8") as fh:
        for raw in CASES:
            attrs = {k: v for k, v in raw.items() if k != "_eeg"}
            record = PatientRecord.from_raw(attrs)
            h = case_id(serialize_case(record))
            case_hashes.append(h)
            row = dict(attrs)
            if raw["_eeg"]:
                row["eeg_refs"] = raw["_eeg"]
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")

    rec_to_patient = {}
    for raw, h in zip(CASES, case_hashes):
        for rid in raw["_eeg"]:
            rec_to_patient[rid] = h

    rng = np.random.default_rng(20240601)
    for rid, kind in RECORDING_KINDS.items():
        sig = _signal(kind, rng)
        obj = {
            "id": rid,
            "patient_hash": rec_to_patient.get(rid),
            "sample_rate": FS,
            "channels": [
                {"name": name, "samples": [round(float(v), 4) for v in sig[c]]}
                for c, name in enumerate(CHANNELS)
            ],
        }
        with open(ROOT / "eeg" / f"{rid}.json", "w", encoding="utf-8") as fh:
            json.dump(obj, fh, ensure_ascii=False)
            fh.write("\n")

    with open(ROOT / "qa.jsonl", "w", encoding="utf-8") as fh:
        for qid, domain, role, question, eeg_ref, gold in QA:
            row = {"id": qid, "domain": domain, "role": role, "question": question, "gold": gold}
            if eeg_ref:
                row["eeg_ref"] = eeg_ref
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")

    print(f"corpus written under {ROOT}")
    for raw, h in zip(CASES, case_hashes):
        print(f"  case {h}  {raw.get('diagnosis')}")


if __name__ == "__main__":
    main()
