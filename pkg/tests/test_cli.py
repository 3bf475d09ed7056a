import json
from pathlib import Path

import pytest

from eegrag.cli import main

from conftest import FIXTURES, GOLDEN


@pytest.fixture(scope="module")
def built_store(tmp_path_factory) -> Path:
    store = tmp_path_factory.mktemp("store")
    assert main(["ingest-docs", str(FIXTURES / "docs.jsonl"), "--store", str(store)]) == 0
    assert main(["ingest-cases", str(FIXTURES / "cases.jsonl"), "--store", str(store)]) == 0
    assert main(["ingest-eeg", str(FIXTURES / "eeg"), "--store", str(store)]) == 0
    return store


QUERY_ARGS = [
    "query",
    "A 34 year old woman shows 3 Hz spike-wave discharge with brief staring spells. What is the likely diagnosis?",
    "--role",
    "doctor",
    "--eeg-id",
    "rec-001",
]


class TestIngest:
    def test_zero_line_docs_file(self, tmp_path, capsys):
        empty = tmp_path / "docs.jsonl"
        empty.write_text("")
        assert main(["ingest-docs", str(empty), "--store", str(tmp_path / "s")]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["documents"] == 0
        assert report["entities_added"] == 0

    def test_malformed_line_names_line_number(self, tmp_path, capsys):
        bad = tmp_path / "docs.jsonl"
        bad.write_text('{"id": "d1", "title": "", "body": "ok"}\n{oops\n')
        code = main(["ingest-docs", str(bad), "--store", str(tmp_path / "s")])
        assert code != 0
        assert "line 2" in capsys.readouterr().err

    def test_double_ingest_all_merged(self, built_store, tmp_path, capsys):
        store2 = tmp_path / "fresh"
        main(["ingest-docs", str(FIXTURES / "docs.jsonl"), "--store", str(store2)])
        capsys.readouterr()
        main(["ingest-docs", str(FIXTURES / "docs.jsonl"), "--store", str(store2)])
        second = json.loads(capsys.readouterr().out)
        assert second["entities_added"] == 0
        assert second["hyperedges_added"] == 0
        assert second["entities_merged"] > 0

    def test_ingest_eeg_skips_known_recordings(self, built_store, capsys):
        assert main(["ingest-eeg", str(FIXTURES / "eeg"), "--store", str(built_store)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["recordings_inserted"] == 0
        assert report["recordings_skipped"] == 6


class TestQuery:
    def test_golden_transcript(self, built_store, capsys):
        assert main(QUERY_ARGS + ["--store", str(built_store)]) == 0
        out = capsys.readouterr().out
        golden = (GOLDEN / "query_transcript.json").read_text(encoding="utf-8")
        assert out == golden

    def test_repeat_runs_byte_identical(self, built_store, capsys):
        main(QUERY_ARGS + ["--store", str(built_store)])
        first = capsys.readouterr().out
        main(QUERY_ARGS + ["--store", str(built_store)])
        second = capsys.readouterr().out
        assert first.encode() == second.encode()

    def test_eeg_ignored_when_channel_disabled(self, built_store, capsys):
        args = QUERY_ARGS + ["--store", str(built_store), "--set", "el=false"]
        assert main(args) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["traces"]["eeg"] == []
        assert result["context"]["eeg_matches"] == []

    def test_eeg_file_ignored_with_warning_when_disabled(self, built_store, capsys, caplog):
        args = [
            "query",
            "anything at all",
            "--eeg",
            str(FIXTURES / "eeg" / "rec-003.json"),
            "--store",
            str(built_store),
            "--set",
            "el=false",
        ]
        with caplog.at_level("WARNING", logger="eegrag.pipeline"):
            assert main(args) == 0
        assert any("ignoring" in r.message for r in caplog.records)
        result = json.loads(capsys.readouterr().out)
        assert result["traces"]["eeg"] == []

    def test_eeg_file_query_matches_itself(self, built_store, capsys):
        args = [
            "query",
            "what does this recording resemble",
            "--eeg",
            str(FIXTURES / "eeg" / "rec-003.json"),
            "--store",
            str(built_store),
        ]
        assert main(args) == 0
        result = json.loads(capsys.readouterr().out)
        top = result["traces"]["eeg"][0]
        assert top["recording_id"] == "rec-003"
        assert top["distance"] == 0.0

    def test_query_against_empty_knowledge_store(self, tmp_path, capsys):
        store = tmp_path / "empty"
        empty = tmp_path / "docs.jsonl"
        empty.write_text("")
        main(["ingest-docs", str(empty), "--store", str(store)])
        capsys.readouterr()
        assert main(["query", "what about alpha rhythm", "--store", str(store)]) == 0
        result = json.loads(capsys.readouterr().out)
        assert "[Knowledge]\n(none)" in result["rendered_context"]
        assert result["provenance"]["ungrounded"]

    def test_missing_store_guidance(self, tmp_path, capsys):
        code = main(["query", "q", "--store", str(tmp_path / "nowhere")])
        assert code == 2
        assert "ingest" in capsys.readouterr().err

    def test_unknown_eeg_id(self, built_store, capsys):
        code = main(["query", "q", "--eeg-id", "rec-nope", "--store", str(built_store)])
        assert code == 2
        assert "rec-nope" in capsys.readouterr().err


class TestBench:
    def test_writes_reports_and_is_deterministic(self, built_store, tmp_path, capsys):
        out1 = tmp_path / "run1"
        out2 = tmp_path / "run2"
        args = ["bench", str(FIXTURES / "qa.jsonl"), "--store", str(built_store), "--set", "bootstrap_resamples=100"]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()
        assert (out1 / "report.txt").read_bytes() == (out2 / "report.txt").read_bytes()
        table = capsys.readouterr().out
        assert "Overall" in table
        payload = json.loads((out1 / "report.json").read_text())
        assert payload["errored"] == 0
        assert len(payload["examples"]) == 12

    def test_echo_gold_client_scores_hundred_everywhere(self, built_store):
        from eegrag.config import PipelineConfig
        from eegrag.evaluation import load_qa, run_benchmark
        from eegrag.fusion import CannedAnswerClient
        from eegrag.pipeline import Pipeline

        dataset = load_qa(FIXTURES / "qa.jsonl")
        client = CannedAnswerClient({e.question: e.gold for e in dataset})
        pipeline = Pipeline.from_directory(built_store, PipelineConfig(), client=client)
        report = run_benchmark(dataset, pipeline, resamples=0, seed=0)
        assert report.overall.em == 100.0 and report.overall.f1 == 100.0
        for agg in list(report.domains.values()) + list(report.roles.values()):
            assert agg.em == 100.0 and agg.f1 == 100.0
        assert "100.00" in report.format_table()

    def test_missing_recording_counted_as_errored(self, built_store, tmp_path, capsys):
        dataset = tmp_path / "qa.jsonl"
        dataset.write_text(
            '{"id": "x1", "domain": "d", "role": "r", "question": "q?", "gold": "g", "eeg_ref": "rec-missing"}\n'
            '{"id": "x2", "domain": "d", "role": "r", "question": "q2?", "gold": "g"}\n'
        )
        code = main(
            ["bench", str(dataset), "--store", str(built_store), "--out", str(tmp_path / "o"),
             "--set", "bootstrap_resamples=0"]
        )
        assert code == 0
        payload = json.loads((tmp_path / "o" / "report.json").read_text())
        assert payload["errored"] == 1

    def test_all_errored_returns_nonzero(self, built_store, tmp_path):
        dataset = tmp_path / "qa.jsonl"
        dataset.write_text(
            '{"id": "x1", "domain": "d", "role": "r", "question": "q?", "gold": "g", "eeg_ref": "rec-missing"}\n'
        )
        code = main(
            ["bench", str(dataset), "--store", str(built_store), "--out", str(tmp_path / "o"),
             "--set", "bootstrap_resamples=0"]
        )
        assert code == 1


class TestAblationSemantics:
    def run_query_with(self, built_store, capsys, *sets: str) -> dict:
        args = QUERY_ARGS + ["--store", str(built_store)]
        for s in sets:
            args += ["--set", s]
        assert main(args) == 0
        return json.loads(capsys.readouterr().out)

    def test_each_flag_empties_exactly_its_channel(self, built_store, capsys):
        full = self.run_query_with(built_store, capsys)
        assert full["traces"]["eeg"] and full["traces"]["hyperedges"] and full["traces"]["entities"]

        no_el = self.run_query_with(built_store, capsys, "el=false")
        assert no_el["traces"]["eeg"] == []
        assert no_el["traces"]["hyperedges"] == full["traces"]["hyperedges"]
        assert no_el["traces"]["entities"] == full["traces"]["entities"]

        no_il = self.run_query_with(built_store, capsys, "il=false")
        assert no_il["traces"]["hyperedges"] == []
        assert no_il["traces"]["eeg"] == full["traces"]["eeg"]
        assert no_il["traces"]["entities"] == full["traces"]["entities"]

        no_cl = self.run_query_with(built_store, capsys, "cl=false")
        assert no_cl["traces"]["entities"] == []
        assert no_cl["traces"]["expansion_edges"] == []
        assert no_cl["traces"]["eeg"] == full["traces"]["eeg"]
        assert no_cl["traces"]["hyperedges"] == full["traces"]["hyperedges"]

    def test_all_disabled_is_question_only(self, built_store, capsys):
        naive = self.run_query_with(
            built_store, capsys, "cl=false", "il=false", "el=false"
        )
        assert naive["traces"] == {
            "eeg": [],
            "hyperedges": [],
            "entities": [],
            "expansion_edges": [],
        }
        assert naive["provenance"]["ungrounded"]
        assert naive["context"]["hyperedges"] == []
        assert naive["rendered_context"] == (
            "[Knowledge]\n(none)\n\n[Similar Cases]\n(none)\n\n[EEG Matches]\n(none)"
        )
