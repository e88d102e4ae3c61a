"""Loopback static server used by crawler/service tests.

Serves files from a directory and a few synthetic routes:
  /redirect/<n>/<name>  chain of n redirects ending at /<name>
  /status/<code>        responds with that HTTP status
  /big/<nbytes>         body of exactly n bytes
Every request is appended to `requests` as (path, monotonic-start).
"""

from __future__ import annotations

import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path


class FixtureServer:
    def __init__(self, root: Path):
        self.root = Path(root)
        self.requests: list[tuple[str, float]] = []
        self._lock = threading.Lock()
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_GET(self):
                with server._lock:
                    server.requests.append((self.path, time.monotonic()))
                parts = self.path.lstrip("/").split("/")
                if parts[0] == "status":
                    self.send_response(int(parts[1]))
                    self.end_headers()
                    return
                if parts[0] == "big":
                    body = b"x" * int(parts[1])
                    self.send_response(200)
                    self.send_header("Content-Length", str(len(body)))
                    self.end_headers()
                    self.wfile.write(body)
                    return
                if parts[0] == "slow":
                    time.sleep(float(parts[1]))
                    self.send_response(200)
                    self.send_header("Content-Length", "2")
                    self.end_headers()
                    self.wfile.write(b"ok")
                    return
                if parts[0] == "redirect":
                    hops = int(parts[1])
                    target = "/".join(parts[2:])
                    if hops <= 1:
                        location = f"/{target}"
                    else:
                        location = f"/redirect/{hops - 1}/{target}"
                    self.send_response(302)
                    self.send_header("Location", location)
                    self.end_headers()
                    return
                candidate = server.root / "/".join(parts)
                if candidate.is_file():
                    body = candidate.read_bytes()
                    self.send_response(200)
                    self.send_header("Content-Type", "text/plain; charset=utf-8")
                    self.send_header("Content-Length", str(len(body)))
                    self.end_headers()
                    self.wfile.write(body)
                else:
                    self.send_response(404)
                    self.end_headers()

        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.port = self._httpd.server_address[1]
        self.base_url = f"http://127.0.0.1:{self.port}"
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    def start(self) -> "FixtureServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()

    def url(self, name: str) -> str:
        return f"{self.base_url}/{name}"
