"""In-process block-placement server for offline tests and demos.

Speaks the same wire protocol place_via_http expects: GET /version and
PUT /blocks with a JSON array body.  Every request body is kept verbatim
in ``transcript`` so tests can compare byte-exact goldens.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable
from urllib.parse import parse_qs, urlparse


@dataclass
class RecordedRequest:
    method: str
    path: str
    query: dict[str, str]
    body: str


@dataclass
class StubPlacementServer:
    """Threaded stub server; use as a context manager.

    ``fail_predicate`` takes a block entry dict and returns an error string
    to reject that block, or None to accept it.
    """

    host: str = "127.0.0.1"
    port: int = 0
    version: str = "1.19.2"
    fail_predicate: Callable[[dict], str | None] | None = None
    transcript: list[RecordedRequest] = field(default_factory=list)
    placed: dict[tuple[int, int, int], dict] = field(default_factory=dict)

    def __post_init__(self) -> None:
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args) -> None:
                pass

            def _send_json(self, status: int, payload) -> None:
                data = json.dumps(payload).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def do_GET(self) -> None:
                parsed = urlparse(self.path)
                stub._record("GET", parsed, "")
                if parsed.path == "/version":
                    self._send_json(200, {"name": "t2bm-stub", "version": stub.version})
                else:
                    self._send_json(404, {"error": f"unknown path {parsed.path}"})

            def do_PUT(self) -> None:
                parsed = urlparse(self.path)
                length = int(self.headers.get("Content-Length", "0"))
                body = self.rfile.read(length).decode("utf-8")
                stub._record("PUT", parsed, body)
                if parsed.path != "/blocks":
                    self._send_json(404, {"error": f"unknown path {parsed.path}"})
                    return
                try:
                    entries = json.loads(body)
                    assert isinstance(entries, list)
                except (ValueError, AssertionError):
                    self._send_json(400, {"error": "body must be a JSON array"})
                    return
                query = parse_qs(parsed.query)
                ox = int(query.get("x", ["0"])[0])
                oy = int(query.get("y", ["0"])[0])
                oz = int(query.get("z", ["0"])[0])
                results = []
                for entry in entries:
                    reason = stub.fail_predicate(entry) if stub.fail_predicate else None
                    if reason:
                        results.append({"status": 0, "error": reason})
                        continue
                    key = (entry["x"] + ox, entry["y"] + oy, entry["z"] + oz)
                    stub.placed[key] = entry
                    results.append({"status": 1})
                self._send_json(200, results)

        self._server = ThreadingHTTPServer((self.host, self.port), Handler)
        self.port = self._server.server_address[1]
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    def _record(self, method: str, parsed, body: str) -> None:
        query = {k: v[0] for k, v in parse_qs(parsed.query).items()}
        self.transcript.append(RecordedRequest(method, parsed.path, query, body))

    @property
    def endpoint(self) -> str:
        return f"http://{self.host}:{self.port}"

    def start(self) -> "StubPlacementServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "StubPlacementServer":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.stop()
