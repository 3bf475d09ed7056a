import json
import threading
import urllib.error
import urllib.request

import pytest

from eegrag.cli import main
from eegrag.config import PipelineConfig
from eegrag.pipeline import Pipeline
from eegrag.server import PipelineServer

from conftest import FIXTURES


@pytest.fixture(scope="module")
def endpoint(tmp_path_factory):
    store = tmp_path_factory.mktemp("store")
    for args in (
        ["ingest-docs", str(FIXTURES / "docs.jsonl")],
        ["ingest-cases", str(FIXTURES / "cases.jsonl")],
        ["ingest-eeg", str(FIXTURES / "eeg")],
    ):
        assert main(args + ["--store", str(store)]) == 0
    pipeline = Pipeline.from_directory(store, PipelineConfig())
    server = PipelineServer(pipeline, "127.0.0.1", 0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}", store
    server.shutdown()
    server.server_close()


def post(url: str, payload) -> tuple[int, dict | str]:
    data = json.dumps(payload).encode() if not isinstance(payload, bytes) else payload
    request = urllib.request.Request(
        url, data=data, headers={"Content-Type": "application/json"}, method="POST"
    )
    try:
        with urllib.request.urlopen(request, timeout=10) as resp:
            return resp.status, json.loads(resp.read().decode())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read().decode())


class TestHealthz:
    def test_counts_match_ingest(self, endpoint):
        url, _ = endpoint
        with urllib.request.urlopen(f"{url}/healthz", timeout=10) as resp:
            stats = json.loads(resp.read().decode())
        # 26 doc entities; 13 knowledge edges + 9 linked case edges;
        # 8 real cases + 1 pseudo-case; 6 recordings
        assert stats == {
            "entities": 26,
            "hyperedges": 22,
            "cases": 9,
            "eeg_recordings": 6,
            "embedding_dim": 256,
        }

    def test_unknown_path_404(self, endpoint):
        url, _ = endpoint
        with pytest.raises(urllib.error.HTTPError) as err:
            urllib.request.urlopen(f"{url}/nope", timeout=10)
        assert err.value.code == 404


class TestQueryEndpoint:
    QUESTION = (
        "A 34 year old woman shows 3 Hz spike-wave discharge with brief staring "
        "spells. What is the likely diagnosis?"
    )

    def test_matches_cli_output(self, endpoint, capsys):
        url, store = endpoint
        status, body = post(
            f"{url}/query",
            {"question": self.QUESTION, "role": "doctor", "eeg_recording_id": "rec-001"},
        )
        assert status == 200
        assert main(
            [
                "query",
                self.QUESTION,
                "--role",
                "doctor",
                "--eeg-id",
                "rec-001",
                "--store",
                str(store),
            ]
        ) == 0
        cli_payload = json.loads(capsys.readouterr().out)
        assert body == cli_payload

    def test_unknown_recording_is_404(self, endpoint):
        url, _ = endpoint
        status, body = post(f"{url}/query", {"question": "q", "eeg_recording_id": "rec-x"})
        assert status == 404
        assert "rec-x" in body["error"]

    def test_malformed_body_is_400(self, endpoint):
        url, _ = endpoint
        status, _ = post(f"{url}/query", b"this is not json")
        assert status == 400
        status, _ = post(f"{url}/query", {"no_question": True})
        assert status == 400
        status, _ = post(f"{url}/query", {"question": "   "})
        assert status == 400

    def test_post_to_unknown_path_404(self, endpoint):
        url, _ = endpoint
        status, _ = post(f"{url}/other", {"question": "q"})
        assert status == 404
