"""In-process mock server for the oracle wire protocol.

Serves deterministic responses from a mock rulebook so the remote client (and
the external bridge) can be contract-tested without any model provider.
Responses use the same canonical JSON as the rest of the toolkit.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .dataio import canonical_dumps
from .oracle import (ENDPOINTS, ObservationPayload, OracleProtocolError, Rulebook,
                     ScriptedOracle, validate_request)

DEFAULT_MOCK_RULEBOOK = {
    "answers": {},
    "default_answer": "unknown",
    "default_target_visible": True,
    "target_visible_by_image_ref": {},
    "region": {"region_type": "kitchen", "confidence": 0.8, "rep_point": {"x": 3, "y": 4}},
    "region_by_image_ref": {},
    "stop_default": True,
    "stop_by_image_ref": {},
    "semantic_default": {"v_l_value": 0.1, "v_g": 0.5},
    "semantic_by_image_ref": {},
    "overrides": [],
}


def _grading_payload(question: str, target_visible: bool) -> ObservationPayload:
    return ObservationPayload(
        question=question, pose=(0.0, 0.0, 0.0), sample_cells=(),
        visible_region_counts={}, visible_free_count=0, region_rep_cells={},
        sample_region_types=(), target_visible=target_visible)


class MockOracle:
    """Pure request -> response logic behind the HTTP layer (testable directly)."""

    def __init__(self, rulebook: dict | None = None):
        merged = dict(DEFAULT_MOCK_RULEBOOK)
        merged.update(rulebook or {})
        self.rules = merged
        self._grader = ScriptedOracle(Rulebook())

    def respond(self, endpoint: str, body: dict) -> dict:
        validate_request(endpoint, body)
        ref = body["image_ref"]
        for override in self.rules["overrides"]:
            if override.get("endpoint") == endpoint and override.get("image_ref") == ref:
                return override["response"]
        if endpoint == "semantic_scores":
            special = self.rules["semantic_by_image_ref"].get(ref)
            if special is not None:
                return {"v_l": special["v_l"], "v_g": special["v_g"]}
            default = self.rules["semantic_default"]
            return {"v_l": [default["v_l_value"]] * len(body["sample_points"]),
                    "v_g": default["v_g"]}
        if endpoint == "classify_region":
            return self.rules["region_by_image_ref"].get(ref, self.rules["region"])
        if endpoint == "should_stop":
            stop = self.rules["stop_by_image_ref"].get(ref, self.rules["stop_default"])
            return {"stop": bool(stop)}
        if endpoint == "answer":
            answer = self.rules["answers"].get(body["question"],
                                               self.rules["default_answer"])
            return {"answer": answer}
        # grade: reuse the scripted grader with rulebook-resolved visibility
        visible = self.rules["target_visible_by_image_ref"].get(
            ref, self.rules["default_target_visible"])
        sigma, delta = self._grader.grade(body["question"], body["gold"],
                                          body["answer"],
                                          _grading_payload(body["question"], visible))
        return {"sigma": sigma, "delta": delta}


class _Handler(BaseHTTPRequestHandler):
    oracle: MockOracle  # set by the server factory

    def log_message(self, fmt, *args):  # quiet
        pass

    def _send(self, status: int, obj: dict) -> None:
        data = (canonical_dumps(obj) + "\n").encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _error(self, status: int, code: str, message: str) -> None:
        self._send(status, {"error": {"code": code, "message": message}})

    def do_GET(self):
        if self.path == "/health":
            self._send(200, {"status": "ok"})
        else:
            self._error(404, "not_found", f"unknown path {self.path}")

    def do_POST(self):
        if not self.path.startswith("/v1/"):
            self._error(404, "not_found", f"unknown path {self.path}")
            return
        endpoint = self.path[len("/v1/"):]
        if endpoint not in ENDPOINTS:
            self._error(404, "not_found", f"unknown endpoint {endpoint!r}")
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, UnicodeDecodeError):
            self._error(400, "bad_request", "request body is not valid JSON")
            return
        try:
            response = self.oracle.respond(endpoint, body)
        except OracleProtocolError as exc:
            self._error(400, "bad_request", str(exc))
            return
        self._send(200, response)


class MockOracleServer:
    """Threaded HTTP server wrapper with a test-friendly lifecycle."""

    def __init__(self, rulebook: dict | None = None, host: str = "127.0.0.1",
                 port: int = 0):
        handler = type("BoundHandler", (_Handler,), {"oracle": MockOracle(rulebook)})
        self._server = ThreadingHTTPServer((host, port), handler)
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "MockOracleServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join()

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def __enter__(self) -> "MockOracleServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
