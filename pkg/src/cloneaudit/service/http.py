"""Minimal JSON-over-HTTP plumbing for the apprentice and manager services.

Built on the stdlib threading HTTP server so multiple service instances can
run inside one process (handy for tests and single-machine setups). Routes
are (method, path regex, handler) triples; handlers return (status, payload)
where dict payloads are serialized as JSON and (bytes, content-type) tuples
pass through untouched.
"""

from __future__ import annotations

import gzip
import json
import logging
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

logger = logging.getLogger(__name__)


class HttpError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


class Request:
    def __init__(self, method: str, path: str, query: dict, headers, body: bytes):
        self.method = method
        self.path = path
        self.query = query
        self.headers = headers
        self.body = body

    def json(self):
        try:
            return json.loads(self.body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise HttpError(400, f"invalid JSON body: {exc}") from exc

    def text(self) -> str:
        return self.body.decode("utf-8", errors="replace")

    def query_param(self, name: str, default=None):
        values = self.query.get(name)
        return values[0] if values else default


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    routes: list[tuple[str, re.Pattern, object]] = []

    def log_message(self, fmt, *args):
        logger.debug("%s %s", self.address_string(), fmt % args)

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length) if length else b""
        if self.headers.get("Content-Encoding", "").lower() == "gzip":
            try:
                body = gzip.decompress(body)
            except OSError as exc:
                raise HttpError(400, f"bad gzip body: {exc}") from exc
        return body

    def _dispatch(self, method: str):
        split = urlsplit(self.path)
        try:
            body = self._read_body()
            request = Request(
                method, split.path, parse_qs(split.query), self.headers, body
            )
            for route_method, pattern, handler in self.routes:
                if route_method != method:
                    continue
                match = pattern.fullmatch(split.path)
                if match:
                    status, payload = handler(request, match)
                    self._respond(status, payload)
                    return
            self._respond(404, {"error": f"no route for {method} {split.path}"})
        except HttpError as exc:
            self._respond(exc.status, {"error": exc.message})
        except Exception as exc:  # report, don't kill the connection thread
            logger.exception("unhandled error serving %s %s", method, self.path)
            self._respond(500, {"error": f"internal error: {exc}"})

    def _respond(self, status: int, payload):
        if isinstance(payload, tuple):
            data, content_type = payload
            if isinstance(data, str):
                data = data.encode("utf-8")
        else:
            data = json.dumps(payload, ensure_ascii=False).encode("utf-8")
            content_type = "application/json"
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        self._dispatch("GET")

    def do_PUT(self):
        self._dispatch("PUT")

    def do_POST(self):
        self._dispatch("POST")

    def do_DELETE(self):
        self._dispatch("DELETE")


class JsonHttpService:
    """A route table served by a background ThreadingHTTPServer."""

    def __init__(self, routes, host: str = "127.0.0.1", port: int = 0):
        handler = type("BoundHandler", (_Handler,), {"routes": list(routes)})
        self._server = ThreadingHTTPServer((host, port), handler)
        self._server.daemon_threads = True
        self._thread: threading.Thread | None = None
        self.host = host

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def start(self) -> "JsonHttpService":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None


def route(method: str, pattern: str, handler):
    return (method, re.compile(pattern), handler)
