"""Client for a remote next-token scoring service.

Wire format: one JSON object per line over a TCP byte stream.

    request:  {"knowledge": str, "prefix": [str], "candidates": [str]}
    reply:    {"logprobs": [float], "entropy_raw": float, "vocab_size": int}

Log-probabilities are natural-log, aligned with the request's candidate
order; a null entry means the server cannot score that candidate and the
client substitutes the unknown fallback.  The raw entropy is normalized by
log(vocab_size) client-side.
"""

from __future__ import annotations

import json
import math
import socket
import threading

from . import LMQuery, LMResponse, UNKNOWN_LOGPROB

# Transport slack: a server may emit values a hair above 0 after float
# round-tripping; anything beyond this is a protocol violation.
LOGPROB_SLACK = 1e-9


class RemoteLMError(Exception):
    """Base class for remote-backend failures."""


class TransportError(RemoteLMError):
    """Connection failures and interrupted streams."""


class MalformedReplyError(RemoteLMError):
    """Replies that do not parse or violate the protocol."""


class MissingCandidateError(RemoteLMError):
    """Replies whose logprobs do not cover every requested candidate."""


class RemoteBackend:
    """Line-protocol client; one connection, requests serialized by a lock."""

    concurrency_safe = False

    def __init__(self, host: str, port: int, timeout: float = 30.0):
        self.host = host
        self.port = port
        self.timeout = timeout
        self._lock = threading.Lock()
        self._sock: socket.socket | None = None
        self._reader = None

    def _connect(self):
        try:
            self._sock = socket.create_connection((self.host, self.port), self.timeout)
            self._reader = self._sock.makefile("rb")
        except OSError as exc:
            self._sock = None
            self._reader = None
            raise TransportError(f"cannot connect to {self.host}:{self.port}: {exc}") from exc

    def close(self) -> None:
        with self._lock:
            if self._sock is not None:
                try:
                    self._sock.close()
                finally:
                    self._sock = None
                    self._reader = None

    def _roundtrip(self, payload: dict) -> dict:
        if self._sock is None:
            self._connect()
        try:
            self._sock.sendall(json.dumps(payload, ensure_ascii=False).encode("utf-8") + b"\n")
            line = self._reader.readline()
        except OSError as exc:
            self.close()
            raise TransportError(f"request failed: {exc}") from exc
        if not line:
            self.close()
            raise TransportError("server closed the connection")
        try:
            reply = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise MalformedReplyError(f"reply is not valid JSON: {exc}") from exc
        if not isinstance(reply, dict):
            raise MalformedReplyError(f"reply is not an object: {reply!r}")
        return reply

    def next_token_logprobs(self, query: LMQuery) -> LMResponse:
        payload = {
            "knowledge": query.knowledge_prefix,
            "prefix": list(query.token_prefix),
            "candidates": list(query.candidates),
        }
        with self._lock:
            reply = self._roundtrip(payload)

        if "error" in reply:
            raise MalformedReplyError(f"server error: {reply['error']}")
        try:
            raw_logprobs = reply["logprobs"]
            entropy_raw = float(reply["entropy_raw"])
            vocab_size = int(reply["vocab_size"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedReplyError(f"reply missing fields: {reply!r}") from exc
        if not isinstance(raw_logprobs, list):
            raise MalformedReplyError("logprobs must be a list")
        if len(raw_logprobs) != len(query.candidates):
            raise MissingCandidateError(
                f"expected {len(query.candidates)} logprobs, got {len(raw_logprobs)}"
            )
        if vocab_size < 2:
            raise MalformedReplyError(f"vocab_size must be >= 2, got {vocab_size}")

        logprobs: dict[str, float] = {}
        for text, value in zip(query.candidates, raw_logprobs):
            if value is None:
                logprobs[text] = UNKNOWN_LOGPROB
                continue
            value = float(value)
            if value > LOGPROB_SLACK:
                raise MalformedReplyError(f"positive log-probability {value} for {text!r}")
            logprobs[text] = min(value, 0.0)
        entropy = entropy_raw / math.log(vocab_size)
        if entropy < -LOGPROB_SLACK:
            raise MalformedReplyError(f"negative entropy {entropy_raw}")
        return LMResponse(logprobs=logprobs, entropy=min(1.0, max(0.0, entropy)))
