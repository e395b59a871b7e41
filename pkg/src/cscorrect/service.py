"""Line-protocol correction service.

One JSON object per line in both directions:

    request:  {"text": str, "knowledge": str?}
    reply:    {"output": str, "score": float}
    failure:  {"error": str}          (connection stays usable)

Requests run concurrently when the LM backend is concurrency-safe,
otherwise a lock serializes them; replies are identical either way.
"""

from __future__ import annotations

import json
import logging
import signal
import socketserver
import threading
from dataclasses import replace

from .decoder import DecoderConfig, Engine

log = logging.getLogger(__name__)


class CorrectionHandler(socketserver.StreamRequestHandler):
    def handle(self):
        server: CorrectionServer = self.server  # type: ignore[assignment]
        for raw in self.rfile:
            reply = server.handle_line(raw)
            self.wfile.write(json.dumps(reply, ensure_ascii=False).encode("utf-8") + b"\n")
            self.wfile.flush()


class CorrectionServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, bind_address, engine: Engine, cfg: DecoderConfig | None = None):
        super().__init__(bind_address, CorrectionHandler)
        self.engine = engine
        self.cfg = cfg or engine.config
        self._lock: threading.Lock | None = None
        if not getattr(engine.backend, "concurrency_safe", False):
            self._lock = threading.Lock()

    def handle_line(self, raw: bytes) -> dict:
        try:
            request = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            return {"error": f"malformed request: {exc}"}
        if not isinstance(request, dict) or not isinstance(request.get("text"), str):
            return {"error": "request must be an object with a string 'text' field"}
        knowledge = request.get("knowledge")
        if knowledge is not None and not isinstance(knowledge, str):
            return {"error": "'knowledge' must be a string"}
        cfg = self.cfg
        if knowledge is not None:
            cfg = replace(cfg, knowledge_prefix=knowledge)
        try:
            if self._lock is not None:
                with self._lock:
                    result = self.engine.correct(request["text"], cfg)
            else:
                result = self.engine.correct(request["text"], cfg)
        except Exception as exc:
            log.warning("correction failed: %s", exc)
            return {"error": str(exc)}
        return {"output": result.output, "score": result.score}


def serve_forever(engine: Engine, host: str, port: int, cfg: DecoderConfig | None = None):
    """Run the service until SIGINT/SIGTERM; returns the bound address."""
    server = CorrectionServer((host, port), engine, cfg)

    def shutdown(signum, frame):
        log.info("signal %d, shutting down", signum)
        threading.Thread(target=server.shutdown, daemon=True).start()

    signal.signal(signal.SIGINT, shutdown)
    signal.signal(signal.SIGTERM, shutdown)
    log.info("serving on %s:%d", *server.server_address)
    try:
        server.serve_forever()
    finally:
        server.server_close()
    return server.server_address
