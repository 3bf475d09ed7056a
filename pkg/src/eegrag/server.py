"""Read-only HTTP endpoint over a built pipeline.

POST /query  {"question": ..., "role"?: ..., "eeg_recording_id"?: ...}
             -> the same JSON document the `query` CLI subcommand prints
GET  /healthz -> store statistics

Requests are independent and the stores are sealed, so the threading
server needs no locking. Ingestion stays offline by design.
"""

from __future__ import annotations

import json
import logging
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .errors import EegragError, NotFoundError, PreconditionError
from .pipeline import Pipeline

logger = logging.getLogger(__name__)


class _Handler(BaseHTTPRequestHandler):
    server: "PipelineServer"

    def _send(self, status: int, payload: dict | str) -> None:
        body = (
            payload if isinstance(payload, str) else json.dumps(payload, sort_keys=True) + "\n"
        ).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, format: str, *args) -> None:
        logger.debug("%s %s", self.address_string(), format % args)

    def do_GET(self) -> None:
        if self.path == "/healthz":
            self._send(200, self.server.pipeline.stats())
        else:
            self._send(404, {"error": f"unknown path {self.path}"})

    def do_POST(self) -> None:
        if self.path != "/query":
            self._send(404, {"error": f"unknown path {self.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length).decode("utf-8"))
            question = payload["question"]
            if not isinstance(question, str) or not question.strip():
                raise KeyError("question")
        except (json.JSONDecodeError, KeyError, ValueError, UnicodeDecodeError):
            self._send(400, {"error": "body must be JSON with a non-empty 'question' field"})
            return
        try:
            result = self.server.pipeline.run_query(
                question,
                role=payload.get("role"),
                domain=payload.get("domain"),
                eeg_recording_id=payload.get("eeg_recording_id"),
            )
        except NotFoundError as exc:
            self._send(404, {"error": str(exc)})
            return
        except (PreconditionError, EegragError) as exc:
            self._send(400, {"error": str(exc)})
            return
        self._send(200, result.to_json())


class PipelineServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, pipeline: Pipeline, host: str, port: int):
        self.pipeline = pipeline
        super().__init__((host, port), _Handler)


def serve(pipeline: Pipeline, host: str, port: int) -> None:
    """Run the endpoint until interrupted."""
    server = PipelineServer(pipeline, host, port)
    logger.info("serving on %s:%d", *server.server_address[:2])
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
