"""Serve a comment generator over the line-delimited JSON protocol."""
from __future__ import annotations

import json
import logging
import socketserver
import sys
from typing import BinaryIO, Callable

from .adapter import encode_response

logger = logging.getLogger(__name__)


def echo_generate(code: str) -> str:
    """Stub model: the first three whitespace-separated tokens of the code."""
    return " ".join(code.split()[:3])


def serve_stream(fn: Callable[[str], str], infile: BinaryIO, outfile: BinaryIO) -> int:
    """Answer requests from ``infile`` until EOF; returns the number served."""
    served = 0
    for raw in infile:
        if not raw.strip():
            continue
        try:
            req = json.loads(raw.decode("utf-8"))
            req_id, code = req["id"], req["code"]
        except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as exc:
            logger.error("dropping malformed request: %s", exc)
            continue
        outfile.write(encode_response(req_id, fn(code)))
        outfile.flush()
        served += 1
    return served


def serve_stdio(fn: Callable[[str], str]) -> int:
    return serve_stream(fn, sys.stdin.buffer, sys.stdout.buffer)


def make_tcp_server(fn: Callable[[str], str], host: str = "127.0.0.1", port: int = 0) -> socketserver.ThreadingTCPServer:
    """A threading TCP server; one connection per client, requests answered in order."""

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            serve_stream(fn, self.rfile, self.wfile)

    server = socketserver.ThreadingTCPServer((host, port), Handler)
    server.daemon_threads = True
    return server
