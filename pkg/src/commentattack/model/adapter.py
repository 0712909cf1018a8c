"""Black-box access to a victim model over line-delimited JSON.

Requests are ``{"id": <int>, "code": <str>}`` and responses
``{"id": <int>, "comment": <str>}``, one UTF-8 JSON object per ``\\n``
terminated line, over a child process's stdio or a TCP stream. Several
requests may be outstanding at once; responses are matched back to their
callers by id, in whatever order they arrive.
"""
from __future__ import annotations

import itertools
import json
import logging
import shlex
import socket
import subprocess
import threading
from concurrent.futures import Future
from concurrent.futures import TimeoutError as FutureTimeout
from typing import Callable, Dict, List, Optional, Sequence, Union

logger = logging.getLogger(__name__)

SUBPROCESS_STDIO = "subprocess_stdio"
TCP = "tcp"


class AdapterError(RuntimeError):
    pass


class AdapterTimeout(AdapterError):
    pass


class TransportError(AdapterError):
    pass


class ProtocolError(AdapterError):
    pass


def encode_request(req_id: int, code: str) -> bytes:
    return (json.dumps({"id": req_id, "code": code}, ensure_ascii=False, sort_keys=True) + "\n").encode("utf-8")


def encode_response(req_id: int, comment: str) -> bytes:
    return (json.dumps({"comment": comment, "id": req_id}, ensure_ascii=False, sort_keys=True) + "\n").encode("utf-8")


def decode_response(line: bytes) -> tuple:
    try:
        obj = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"malformed response line: {exc}") from None
    if not isinstance(obj, dict) or not isinstance(obj.get("id"), int) or isinstance(obj.get("id"), bool) \
            or not isinstance(obj.get("comment"), str):
        raise ProtocolError(f"response must carry an integer 'id' and a string 'comment': {obj!r}")
    return obj["id"], obj["comment"]


class LocalAdapter:
    """In-process model behind the same ``generate`` surface as ``ModelAdapter``."""

    def __init__(self, fn: Callable[[str], str], name: str = "local"):
        self.fn = fn
        self.name = name

    def generate(self, code: str) -> str:
        return self.fn(code)

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class ModelAdapter:
    """Client for a model server speaking the line-delimited JSON protocol.

    ``endpoint`` is a command line (str or argv list) for ``subprocess_stdio``
    or ``host:port`` for ``tcp``. ``generate`` is thread-safe; at most
    ``max_in_flight`` requests are outstanding at any time. A timed-out
    request is retried once under a fresh id before ``AdapterTimeout``.
    """

    def __init__(self, transport: str, endpoint: Union[str, Sequence[str]], timeout_ms: int = 30000,
                 max_in_flight: int = 4):
        if transport not in (SUBPROCESS_STDIO, TCP):
            raise ValueError(f"unknown transport {transport!r}")
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be positive")
        self.transport = transport
        self.endpoint = endpoint
        self.timeout_ms = timeout_ms
        self.max_in_flight = max_in_flight
        self._ids = itertools.count(1)
        self._pending: Dict[int, Future] = {}
        self._abandoned: set = set()
        self._lock = threading.Lock()
        self._write_lock = threading.Lock()
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._broken: Optional[AdapterError] = None
        self._proc: Optional[subprocess.Popen] = None
        self._sock: Optional[socket.socket] = None
        self._reader = None
        self._writer = None
        self._thread: Optional[threading.Thread] = None

    # -- lifecycle
    def start(self) -> "ModelAdapter":
        if self._thread is not None:
            return self
        try:
            if self.transport == SUBPROCESS_STDIO:
                argv = shlex.split(self.endpoint) if isinstance(self.endpoint, str) else list(self.endpoint)
                self._proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                              stderr=subprocess.DEVNULL)
                self._reader, self._writer = self._proc.stdout, self._proc.stdin
            else:
                host, _, port = str(self.endpoint).rpartition(":")
                self._sock = socket.create_connection((host or "127.0.0.1", int(port)),
                                                      timeout=self.timeout_ms / 1000)
                self._sock.settimeout(None)
                self._reader = self._sock.makefile("rb")
                self._writer = self._sock.makefile("wb")
        except (OSError, ValueError) as exc:
            raise TransportError(f"cannot reach model at {self.endpoint!r}: {exc}") from exc
        self._thread = threading.Thread(target=self._read_loop, name="model-adapter-reader", daemon=True)
        self._thread.start()
        return self

    def close(self) -> None:
        if self._sock is not None:
            # unblocks the reader thread; closing its buffered file first would wait on its lock
            try:
                self._sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
        for f in (self._writer, self._reader):
            try:
                if f is not None:
                    f.close()
            except OSError:
                pass
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
        if self._proc is not None:
            try:
                self._proc.terminate()
                self._proc.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.close()

    # -- reading side
    def _fail_all(self, err: AdapterError) -> None:
        with self._lock:
            if self._broken is None:
                self._broken = err
            pending = list(self._pending.values())
            self._pending.clear()
        for fut in pending:
            if not fut.done():
                fut.set_exception(err)

    def _read_loop(self) -> None:
        try:
            for line in self._reader:
                if not line.strip():
                    continue
                try:
                    req_id, comment = decode_response(line)
                except ProtocolError as exc:
                    self._fail_all(exc)
                    return
                with self._lock:
                    fut = self._pending.pop(req_id, None)
                    late = req_id in self._abandoned
                    self._abandoned.discard(req_id)
                if fut is not None:
                    fut.set_result(comment)
                elif not late:
                    self._fail_all(ProtocolError(f"response for unknown request id {req_id}"))
                    return
        except (OSError, ValueError):
            pass
        self._fail_all(TransportError("model closed the connection"))

    # -- writing side
    def _send(self, code: str) -> tuple:
        fut: Future = Future()
        with self._lock:
            if self._broken is not None:
                raise self._broken
            req_id = next(self._ids)
            self._pending[req_id] = fut
        try:
            with self._write_lock:
                self._writer.write(encode_request(req_id, code))
                self._writer.flush()
        except (OSError, ValueError) as exc:
            err = TransportError(f"write to model failed: {exc}")
            self._fail_all(err)
            raise err from exc
        return req_id, fut

    def generate(self, code: str) -> str:
        if self._thread is None:
            self.start()
        with self._slots:
            for attempt in range(2):
                req_id, fut = self._send(code)
                try:
                    return fut.result(timeout=self.timeout_ms / 1000)
                except FutureTimeout:
                    with self._lock:
                        self._pending.pop(req_id, None)
                        self._abandoned.add(req_id)
                    logger.warning("model request %d timed out (attempt %d)", req_id, attempt + 1)
        raise AdapterTimeout(f"model did not answer within {self.timeout_ms} ms (after one retry)")


def generate(adapter, code: str) -> str:
    """Query any adapter-like object for the comment of ``code``."""
    return adapter.generate(code)


def generate_many(adapter, codes: List[str], jobs: int = 1) -> List[str]:
    """Query several snippets, optionally from ``jobs`` threads; results keep input order."""
    if jobs <= 1:
        return [adapter.generate(c) for c in codes]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(adapter.generate, codes))
