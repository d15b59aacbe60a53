"""Line-based TCP protocol: framing, codec, and the blocking client.

Requests are a single LF-terminated line, TAB-separated:

    VERB ( TAB field )* LF

Responses are either an error line or a count-prefixed block of records:

    ERR TAB code TAB message LF
    OK TAB count LF ( field ( TAB field )* LF ) * count

Lines never exceed 64 KiB. Fields are UTF-8 text with TAB/CR/LF forbidden;
encoders sanitize them to spaces so anything representable is transmittable.
Parsers are total: any byte input either decodes or raises MalformedLine /
MalformedResponse - nothing crashes, nothing hangs.
"""

from __future__ import annotations

import re
import socket
import threading
from dataclasses import dataclass
from typing import Union

MAX_LINE = 64 * 1024
PROTOCOL_VERSION = "1"
DEFAULT_PORT = 9000

ERR_BAD_REQUEST = 400
ERR_NOT_FOUND = 404
ERR_CONFLICT = 409
ERR_INVALID = 422
ERR_INTERNAL = 500
ERR_CODES = frozenset({400, 404, 409, 422, 500})

VERBS = (
    "HELLO",
    "EXP-CREATE",
    "EXP-LIST",
    "EXP-START",
    "EXP-STOP",
    "EXP-SHUTDOWN",
    "EXP-STATUS",
    "QOS-SET",
    "QOS-GET",
    "JOB-LIST",
    "JOB-INFO",
    "JOB-RESTART",
    "JOB-RESTART-FAILED",
    "RES-LIST",
)

_VERB_RE = re.compile(r"\A[A-Z][A-Z-]{1,31}\Z")
# record count parsers must not trust the peer: cap what we will read
MAX_RECORDS = 1_000_000


class MalformedLine(ValueError):
    """Request line violates the framing or field rules."""


class MalformedResponse(ValueError):
    """Response bytes violate the framing, count, or code rules."""


class TransportError(Exception):
    """Base for socket-level failures, distinct from protocol ERR replies."""


class Timeout(TransportError):
    pass


class ConnectionRefused(TransportError):
    pass


class BrokerError(Exception):
    """An ERR reply from the broker, surfaced with its code intact."""

    def __init__(self, code: int, message: str):
        super().__init__(f"ERR {code} {message}")
        self.code = code
        self.message = message


@dataclass(frozen=True)
class Request:
    verb: str
    args: tuple[str, ...] = ()


@dataclass(frozen=True)
class OkResponse:
    records: tuple[tuple[str, ...], ...] = ()


@dataclass(frozen=True)
class ErrResponse:
    code: int
    message: str


Response = Union[OkResponse, ErrResponse]


def sanitize_field(text: str) -> str:
    """Make arbitrary text transmittable: TAB/CR/LF become spaces."""
    return text.replace("\t", " ").replace("\r", " ").replace("\n", " ")


def encode_request(req: Request) -> bytes:
    if not _VERB_RE.match(req.verb):
        raise ValueError(f"bad verb {req.verb!r}")
    parts = [req.verb]
    parts.extend(sanitize_field(a) for a in req.args)
    line = ("\t".join(parts) + "\n").encode("utf-8")
    if len(line) > MAX_LINE:
        raise ValueError(f"request line {len(line)} bytes exceeds {MAX_LINE}")
    return line


def parse_request(line: bytes) -> Request:
    """Decode one LF-terminated request line. Total: raises MalformedLine."""
    text = _decode_line(line, MalformedLine)
    parts = text.split("\t")
    verb = parts[0]
    if not _VERB_RE.match(verb):
        raise MalformedLine(f"bad verb {verb!r}")
    return Request(verb, tuple(parts[1:]))


def encode_response(resp: Response) -> bytes:
    if isinstance(resp, ErrResponse):
        if resp.code not in ERR_CODES:
            raise ValueError(f"unknown error code {resp.code}")
        line = f"ERR\t{resp.code}\t{sanitize_field(resp.message)}\n".encode("utf-8")
        if len(line) > MAX_LINE:
            raise ValueError("error line too long")
        return line
    out = [f"OK\t{len(resp.records)}\n".encode("utf-8")]
    for record in resp.records:
        line = ("\t".join(sanitize_field(f) for f in record) + "\n").encode("utf-8")
        if len(line) > MAX_LINE:
            raise ValueError("record line too long")
        out.append(line)
    return b"".join(out)


def parse_response(data: bytes) -> Response:
    """Decode one complete response block. Total: raises MalformedResponse.

    The block must contain exactly the announced records, nothing more.
    """
    if not data.endswith(b"\n"):
        raise MalformedResponse("missing trailing LF")
    lines = data.split(b"\n")[:-1]
    if not lines:
        raise MalformedResponse("empty response")
    header = _decode_line(lines[0] + b"\n", MalformedResponse)
    parts = header.split("\t")
    if parts[0] == "ERR":
        if len(lines) != 1 or len(parts) != 3:
            raise MalformedResponse("bad ERR shape")
        code = _parse_int(parts[1])
        if code is None or code not in ERR_CODES:
            raise MalformedResponse(f"bad error code {parts[1]!r}")
        return ErrResponse(code, parts[2])
    if parts[0] == "OK":
        if len(parts) != 2:
            raise MalformedResponse("bad OK header")
        count = _parse_int(parts[1])
        if count is None or count > MAX_RECORDS:
            raise MalformedResponse(f"bad record count {parts[1]!r}")
        if len(lines) - 1 != count:
            raise MalformedResponse(
                f"announced {count} records, got {len(lines) - 1} lines"
            )
        records = tuple(
            tuple(_decode_line(line + b"\n", MalformedResponse).split("\t"))
            for line in lines[1:]
        )
        return OkResponse(records)
    raise MalformedResponse(f"bad response tag {parts[0]!r}")


def _decode_line(line: bytes, err: type[ValueError]) -> str:
    if len(line) > MAX_LINE:
        raise err(f"line {len(line)} bytes exceeds {MAX_LINE}")
    if not line.endswith(b"\n"):
        raise err("missing LF")
    body = line[:-1]
    if b"\n" in body:
        raise err("embedded LF")
    if b"\r" in body:
        raise err("embedded CR")
    try:
        return body.decode("utf-8")
    except UnicodeDecodeError:
        raise err("not valid UTF-8") from None


def _parse_int(text: str) -> int | None:
    if not text.isascii() or not text.isdigit():
        return None
    try:
        return int(text)
    except ValueError:
        return None


def parse_addr(text: str, default_port: int = DEFAULT_PORT) -> tuple[str, int]:
    """'host:port' or bare 'host' -> (host, port)."""
    text = text.strip()
    if ":" in text:
        host, _, port_text = text.rpartition(":")
        port = _parse_int(port_text)
        if not host or port is None or not 0 <= port < 65536:
            raise ValueError(f"bad address {text!r}")
        return host, port
    if not text:
        raise ValueError("empty address")
    return text, default_port


def call(addr: tuple[str, int], req: Request, timeout: float = 5.0) -> Response:
    """One-shot request/response over a fresh connection."""
    client = BrokerClient(addr, timeout=timeout)
    try:
        return client.call_raw(req)
    finally:
        client.close()


class BrokerClient:
    """Blocking client; reuses one connection serially, reconnects on error."""

    def __init__(self, addr: tuple[str, int] | str, timeout: float = 5.0):
        self.addr = parse_addr(addr) if isinstance(addr, str) else addr
        self.timeout = timeout
        self._sock: socket.socket | None = None
        self._file = None
        self._lock = threading.Lock()

    def call_raw(self, req: Request) -> Response:
        """Send one request, return the decoded response (ERR included)."""
        with self._lock:
            try:
                self._connect()
                self._sock.sendall(encode_request(req))
                return self._read_response()
            except TransportError:
                self.close_locked()
                raise
            except MalformedResponse:
                # stream is desynced; the connection is useless now
                self.close_locked()
                raise
            except socket.timeout:
                self.close_locked()
                raise Timeout(f"no response from {self.addr} in {self.timeout}s") from None
            except ConnectionRefusedError:
                self.close_locked()
                raise ConnectionRefused(f"{self.addr} refused connection") from None
            except OSError as exc:
                self.close_locked()
                raise TransportError(str(exc)) from None

    def call(self, verb: str, *args: str) -> OkResponse:
        """call_raw plus unwrapping: ERR replies raise BrokerError."""
        resp = self.call_raw(Request(verb, tuple(args)))
        if isinstance(resp, ErrResponse):
            raise BrokerError(resp.code, resp.message)
        return resp

    def _connect(self) -> None:
        if self._sock is not None:
            return
        try:
            self._sock = socket.create_connection(self.addr, timeout=self.timeout)
        except socket.timeout:
            raise Timeout(f"connect to {self.addr} timed out") from None
        except ConnectionRefusedError:
            raise ConnectionRefused(f"{self.addr} refused connection") from None
        except OSError as exc:
            raise TransportError(str(exc)) from None
        self._file = self._sock.makefile("rb")

    def _read_line(self) -> bytes:
        line = self._file.readline(MAX_LINE + 1)
        if not line:
            raise MalformedResponse("connection closed mid-response")
        if not line.endswith(b"\n"):
            raise MalformedResponse("overlong or unterminated response line")
        return line

    def _read_response(self) -> Response:
        header_line = self._read_line()
        header = _decode_line(header_line, MalformedResponse)
        parts = header.split("\t")
        if parts[0] == "ERR":
            if len(parts) != 3:
                raise MalformedResponse("bad ERR shape")
            code = _parse_int(parts[1])
            if code is None or code not in ERR_CODES:
                raise MalformedResponse(f"bad error code {parts[1]!r}")
            return ErrResponse(code, parts[2])
        if parts[0] == "OK":
            if len(parts) != 2:
                raise MalformedResponse("bad OK header")
            count = _parse_int(parts[1])
            if count is None or count > MAX_RECORDS:
                raise MalformedResponse(f"bad record count {parts[1]!r}")
            records = []
            for _ in range(count):
                body = _decode_line(self._read_line(), MalformedResponse)
                records.append(tuple(body.split("\t")))
            return OkResponse(tuple(records))
        raise MalformedResponse(f"bad response tag {parts[0]!r}")

    def close_locked(self) -> None:
        if self._file is not None:
            try:
                self._file.close()
            except OSError:
                pass
            self._file = None
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
            self._sock = None

    def close(self) -> None:
        with self._lock:
            self.close_locked()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
