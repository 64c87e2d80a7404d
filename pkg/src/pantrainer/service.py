"""Authoritative live-session server and its line protocol.

One session = one client connection.  All messages are single UTF-8 lines:

    server: HELLO v1 | LAYOUT <kind> ... ENDLAYOUT | START <t0_ms>
            JUDGE <note_id> HIT <delta_ms> | JUDGE <note_id> MISS
            SCORE <hits> <total> | END | PONG <t_client> <t_server>
    client: HELLO <name> | READY [offset_ms] | PING <t_client>
            STRIKE <dimple> <t_client_ms>

The server clock is authoritative.  The client measures its clock offset
from PING/PONG round trips (NTP midpoint) and reports the estimate with
READY; strike timestamps then map onto the server clock.  Judgments are
incremental but committed only once no in-window strike can still arrive
(onset + window + a delivery grace), which makes the final score equal to
the offline judge over the accumulated strike log.

The same line protocol is served over plain TCP and over WebSocket framing
(sniffed per connection), so browser clients connect to the same port.
"""

from __future__ import annotations

import base64
import bisect
import hashlib
import socket
import struct
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional, Union

from .chart import Chart
from .judge import DEFAULT_WINDOW_MS, _match_sorted
from .layouts import (HandpanModel, LayoutGeometry, LayoutKind, build_layout,
                      handpan_model, serialize_layout)
from .session import TrialResult


class BadMessageError(ValueError):
    pass


class NonMonotoneClockError(ValueError):
    pass


class ProtocolViolationError(Exception):
    pass


class ClientDisconnectedError(Exception):
    """Connection dropped mid-session; carries the partial result."""

    def __init__(self, partial: Optional[TrialResult]):
        super().__init__("client disconnected before session end")
        self.partial = partial


# --- messages ----------------------------------------------------------------

@dataclass(frozen=True)
class ClientHello:
    name: str


@dataclass(frozen=True)
class Ready:
    offset_ms: int = 0


@dataclass(frozen=True)
class Ping:
    t_client_ms: int


@dataclass(frozen=True)
class StrikeMsg:
    dimple: int
    t_client_ms: int


@dataclass(frozen=True)
class ServerHello:
    version: int = 1


@dataclass(frozen=True)
class LayoutHeader:
    kind: LayoutKind


@dataclass(frozen=True)
class EndLayout:
    pass


@dataclass(frozen=True)
class Start:
    t0_ms: int


@dataclass(frozen=True)
class JudgeMsg:
    note_id: int
    hit: bool
    delta_ms: Optional[int] = None


@dataclass(frozen=True)
class ScoreMsg:
    hits: int
    total: int


@dataclass(frozen=True)
class EndMsg:
    pass


@dataclass(frozen=True)
class Pong:
    t_client_ms: int
    t_server_ms: int


ClientMessage = Union[ClientHello, Ready, Ping, StrikeMsg]
ServerMessage = Union[ServerHello, LayoutHeader, EndLayout, Start, JudgeMsg,
                      ScoreMsg, EndMsg, Pong]


def encode_message(msg: Union[ClientMessage, ServerMessage]) -> str:
    if isinstance(msg, ClientHello):
        return f"HELLO {msg.name}"
    if isinstance(msg, Ready):
        return f"READY {msg.offset_ms}" if msg.offset_ms else "READY"
    if isinstance(msg, Ping):
        return f"PING {msg.t_client_ms}"
    if isinstance(msg, StrikeMsg):
        return f"STRIKE {msg.dimple} {msg.t_client_ms}"
    if isinstance(msg, ServerHello):
        return f"HELLO v{msg.version}"
    if isinstance(msg, LayoutHeader):
        return f"LAYOUT {msg.kind.value}"
    if isinstance(msg, EndLayout):
        return "ENDLAYOUT"
    if isinstance(msg, Start):
        return f"START {msg.t0_ms}"
    if isinstance(msg, JudgeMsg):
        return (f"JUDGE {msg.note_id} HIT {msg.delta_ms}" if msg.hit
                else f"JUDGE {msg.note_id} MISS")
    if isinstance(msg, ScoreMsg):
        return f"SCORE {msg.hits} {msg.total}"
    if isinstance(msg, EndMsg):
        return "END"
    if isinstance(msg, Pong):
        return f"PONG {msg.t_client_ms} {msg.t_server_ms}"
    raise BadMessageError(f"cannot encode {msg!r}")


def _int(field: str, line: str) -> int:
    try:
        return int(field)
    except ValueError:
        raise BadMessageError(f"bad integer in {line!r}") from None


def decode_message(line: str, from_client: bool) -> Union[ClientMessage, ServerMessage]:
    """Decode one protocol line; direction disambiguates HELLO."""
    fields = line.rstrip("\r\n").split(" ")
    kind = fields[0]
    if from_client:
        if kind == "HELLO" and len(fields) >= 2:
            return ClientHello(" ".join(fields[1:]))
        if kind == "READY" and len(fields) == 1:
            return Ready(0)
        if kind == "READY" and len(fields) == 2:
            return Ready(_int(fields[1], line))
        if kind == "PING" and len(fields) == 2:
            return Ping(_int(fields[1], line))
        if kind == "STRIKE" and len(fields) == 3:
            dimple = _int(fields[1], line)
            if not 0 <= dimple <= 7:
                raise BadMessageError(f"dimple out of range in {line!r}")
            return StrikeMsg(dimple, _int(fields[2], line))
        raise BadMessageError(f"bad client message {line!r}")
    if kind == "HELLO" and len(fields) == 2 and fields[1].startswith("v"):
        return ServerHello(_int(fields[1][1:], line))
    if kind == "LAYOUT" and len(fields) == 2:
        try:
            return LayoutHeader(LayoutKind(fields[1]))
        except ValueError:
            raise BadMessageError(f"unknown layout kind {fields[1]!r}") from None
    if kind == "ENDLAYOUT" and len(fields) == 1:
        return EndLayout()
    if kind == "START" and len(fields) == 2:
        return Start(_int(fields[1], line))
    if kind == "JUDGE" and len(fields) == 4 and fields[2] == "HIT":
        return JudgeMsg(_int(fields[1], line), True, _int(fields[3], line))
    if kind == "JUDGE" and len(fields) == 3 and fields[2] == "MISS":
        return JudgeMsg(_int(fields[1], line), False)
    if kind == "SCORE" and len(fields) == 3:
        return ScoreMsg(_int(fields[1], line), _int(fields[2], line))
    if kind == "END" and len(fields) == 1:
        return EndMsg()
    if kind == "PONG" and len(fields) == 3:
        return Pong(_int(fields[1], line), _int(fields[2], line))
    raise BadMessageError(f"bad server message {line!r}")


# --- clock sync ---------------------------------------------------------------

@dataclass(frozen=True)
class ClockSync:
    offset_ms: float  # server clock minus client clock
    rtt_ms: float


def estimate_offset(t_client_send: float, t_server: float,
                    t_client_recv: float) -> ClockSync:
    """NTP midpoint estimate from one ping/pong round trip.

    Exact under symmetric latency; off by at most rtt/2 otherwise.
    """
    if t_client_recv < t_client_send:
        raise NonMonotoneClockError("client receive time precedes send time")
    offset = t_server - (t_client_send + t_client_recv) / 2.0
    return ClockSync(offset, t_client_recv - t_client_send)


# --- live session engine (transport-free) -------------------------------------

class _Lane:
    """Per-dimple incremental matcher state."""

    __slots__ = ("notes", "strikes", "dead")

    def __init__(self):
        self.notes: list[tuple[int, int]] = []    # (onset, note_id), sorted
        self.strikes: list[int] = []              # session times, sorted
        self.dead: set[int] = set()               # committed-miss note ids

    def rematch(self, window_ms: int) -> dict[int, int]:
        """Canonical greedy over live data -> {note_id: delta_ms}."""
        live = [(t, nid) for t, nid in self.notes if nid not in self.dead]
        pairs = _match_sorted([t for t, _ in live], self.strikes, window_ms)
        return {live[ni][1]: self.strikes[si] - live[ni][0] for ni, si in pairs}


class LiveSession:
    """Protocol state machine for one session; transport-agnostic.

    Feed inbound lines to on_line() and the clock to on_tick(); both return
    outbound lines.  A judgment commits once no in-window strike can still
    arrive (onset + window + grace on the server clock).
    """

    def __init__(self, chart: Chart, layout: LayoutGeometry,
                 window_ms: int = DEFAULT_WINDOW_MS,
                 lead_in_ms: Optional[int] = None,
                 commit_grace_ms: int = 250,
                 latency_comp_ms: int = 0,
                 song_id: Optional[str] = None):
        if window_ms <= 0:
            raise ValueError("window_ms must be positive")
        self.chart = chart
        self.layout = layout
        self.window_ms = window_ms
        self.lead_in_ms = (lead_in_ms if lead_in_ms is not None
                           else int(layout.travel_time_ms) + 500)
        self.commit_grace_ms = commit_grace_ms
        self.latency_comp_ms = latency_comp_ms
        self.song_id = song_id if song_id is not None else chart.title

        self.state = "hello"
        self.client_name = ""
        self.offset_ms = 0
        self.t0_server: Optional[int] = None
        self.lanes = [_Lane() for _ in range(8)]
        for note in chart.notes:
            self.lanes[note.dimple].notes.append((note.onset_ms, note.id))
        # commit order follows onset order; ties by note id
        self._pending = [(n.onset_ms + window_ms, n.id, n.dimple)
                         for n in chart.notes]
        self._pending.sort()
        self._next_commit = 0
        self.hits: dict[int, int] = {}       # note id -> delta at announce
        self.committed: set[int] = set()
        self.strike_log: list[tuple[int, int]] = []  # (dimple, session_t)

    # -- helpers

    @property
    def done(self) -> bool:
        return self.state == "done"

    def next_deadline(self) -> Optional[int]:
        """Server-clock time of the next judgment commit, if running."""
        if self.state != "running" or self._next_commit >= len(self._pending):
            return None
        expiry = self._pending[self._next_commit][0]
        return self.t0_server + expiry + self.commit_grace_ms

    def result(self) -> TrialResult:
        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        return TrialResult(
            participant=self.client_name or "anonymous",
            order_index=0,
            interface_kind=self.layout.kind.value,
            song_id=self.song_id,
            score=len(self.hits),
            max_score=self.chart.note_count,
            window_ms=self.window_ms,
            timestamp_iso8601=stamp.replace("+00:00", "Z"),
        )

    # -- inbound

    def on_line(self, line: str, now_ms: int) -> list[str]:
        if self.state == "done":
            return []
        msg = decode_message(line, from_client=True)
        if isinstance(msg, Ping):
            return [encode_message(Pong(msg.t_client_ms, now_ms))]
        if isinstance(msg, ClientHello):
            if self.state != "hello":
                raise ProtocolViolationError("duplicate HELLO")
            self.client_name = msg.name
            self.state = "sync"
            return [encode_message(ServerHello())]
        if isinstance(msg, Ready):
            if self.state != "sync":
                raise ProtocolViolationError("READY before HELLO or duplicate")
            self.offset_ms = msg.offset_ms
            self.t0_server = now_ms + self.lead_in_ms
            self.state = "running"
            out = [encode_message(LayoutHeader(self.layout.kind))]
            out += serialize_layout(self.layout).splitlines()
            out.append(encode_message(EndLayout()))
            out.append(encode_message(Start(self.t0_server)))
            return out
        if isinstance(msg, StrikeMsg):
            if self.state != "running":
                raise ProtocolViolationError("STRIKE outside START..END")
            return self._on_strike(msg)
        raise ProtocolViolationError(f"unexpected message {line!r}")

    def _on_strike(self, msg: StrikeMsg) -> list[str]:
        t_server = msg.t_client_ms + self.offset_ms + self.latency_comp_ms
        session_t = t_server - self.t0_server
        self.strike_log.append((msg.dimple, session_t))
        lane = self.lanes[msg.dimple]
        bisect.insort(lane.strikes, session_t)
        out = []
        for note_id, delta in lane.rematch(self.window_ms).items():
            if note_id not in self.hits:
                self.hits[note_id] = delta
                out.append(encode_message(JudgeMsg(note_id, True, delta)))
        return out

    # -- clock-driven commits

    def on_tick(self, now_ms: int) -> list[str]:
        if self.state != "running":
            return []
        out = []
        while self._next_commit < len(self._pending):
            expiry, note_id, dimple = self._pending[self._next_commit]
            if now_ms < self.t0_server + expiry + self.commit_grace_ms:
                break
            self._next_commit += 1
            self.committed.add(note_id)
            if note_id not in self.hits:
                self.lanes[dimple].dead.add(note_id)
                out.append(encode_message(JudgeMsg(note_id, False)))
        if self._next_commit >= len(self._pending):
            out.append(encode_message(ScoreMsg(len(self.hits), self.chart.note_count)))
            out.append(encode_message(EndMsg()))
            self.state = "done"
        return out


# --- transports ----------------------------------------------------------------

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


class _LineChannel:
    """Newline-delimited text over a stream socket."""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.buf = b""

    def recv_line(self, timeout: Optional[float]) -> Optional[str]:
        """Next line, or None on timeout.  Raises ClientDisconnectedError."""
        while b"\n" not in self.buf:
            self.sock.settimeout(timeout)
            try:
                data = self.sock.recv(4096)
            except (socket.timeout, BlockingIOError):
                # timeout 0 flips the socket non-blocking; same meaning here
                return None
            if not data:
                raise ClientDisconnectedError(None)
            self.buf += data
        line, self.buf = self.buf.split(b"\n", 1)
        return line.decode("utf-8").rstrip("\r")

    def send_line(self, line: str) -> None:
        self.sock.sendall(line.encode("utf-8") + b"\n")

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


class _WebSocketChannel:
    """RFC 6455 server side carrying one protocol line per text frame."""

    def __init__(self, sock: socket.socket, residue: bytes = b""):
        self.sock = sock
        self.buf = residue
        self.lines: list[str] = []

    def _read_exact(self, n: int, timeout: Optional[float]) -> Optional[bytes]:
        deadline = None if timeout is None else time.monotonic() + timeout
        while len(self.buf) < n:
            remain = None if deadline is None else max(0.0, deadline - time.monotonic())
            self.sock.settimeout(remain)
            try:
                data = self.sock.recv(4096)
            except (socket.timeout, BlockingIOError):
                return None
            if not data:
                raise ClientDisconnectedError(None)
            self.buf += data
        out, self.buf = self.buf[:n], self.buf[n:]
        return out

    def _read_frame(self, timeout: Optional[float]):
        head = self._read_exact(2, timeout)
        if head is None:
            return None
        b0, b1 = head
        opcode = b0 & 0x0F
        masked = bool(b1 & 0x80)
        length = b1 & 0x7F
        if length == 126:
            length = struct.unpack(">H", self._read_exact(2, None))[0]
        elif length == 127:
            length = struct.unpack(">Q", self._read_exact(8, None))[0]
        mask = self._read_exact(4, None) if masked else b"\x00" * 4
        payload = self._read_exact(length, None) if length else b""
        if masked and payload:
            payload = bytes(c ^ mask[i % 4] for i, c in enumerate(payload))
        return opcode, payload

    def recv_line(self, timeout: Optional[float]) -> Optional[str]:
        while not self.lines:
            frame = self._read_frame(timeout)
            if frame is None:
                return None
            opcode, payload = frame
            if opcode == 0x8:  # close
                self._send_raw(0x8, b"")
                raise ClientDisconnectedError(None)
            if opcode == 0x9:  # ping
                self._send_raw(0xA, payload)
                continue
            if opcode in (0x1, 0x0):
                for ln in payload.decode("utf-8").split("\n"):
                    if ln.strip():
                        self.lines.append(ln.rstrip("\r"))
        return self.lines.pop(0)

    def _send_raw(self, opcode: int, payload: bytes) -> None:
        head = bytes([0x80 | opcode])
        n = len(payload)
        if n < 126:
            head += bytes([n])
        elif n < 1 << 16:
            head += bytes([126]) + struct.pack(">H", n)
        else:
            head += bytes([127]) + struct.pack(">Q", n)
        self.sock.sendall(head + payload)

    def send_line(self, line: str) -> None:
        self._send_raw(0x1, line.encode("utf-8"))

    def close(self) -> None:
        try:
            self._send_raw(0x8, b"")
        except OSError:
            pass
        try:
            self.sock.close()
        except OSError:
            pass


def _now_ms() -> int:
    return time.monotonic_ns() // 1_000_000


def run_session(channel, engine: LiveSession) -> TrialResult:
    """Pump one engine over a line channel until END; returns the result."""
    try:
        while not engine.done:
            deadline = engine.next_deadline()
            timeout = (None if deadline is None
                       else max(0.0, (deadline - _now_ms()) / 1000.0))
            try:
                line = channel.recv_line(timeout)
            except ClientDisconnectedError:
                raise ClientDisconnectedError(engine.result()) from None
            now = _now_ms()
            out = engine.on_line(line, now) if line is not None else []
            out += engine.on_tick(now)
            for ln in out:
                channel.send_line(ln)
        return engine.result()
    finally:
        channel.close()


def live_session(chart: Chart, layout_kind: LayoutKind, window_ms: int,
                 connection: socket.socket,
                 model: Optional[HandpanModel] = None,
                 **engine_kwargs) -> TrialResult:
    """Serve one live session over an accepted stream socket."""
    layout = build_layout(layout_kind, model or handpan_model(), chart)
    engine = LiveSession(chart, layout, window_ms, **engine_kwargs)
    return run_session(_LineChannel(connection), engine)


# --- the server ------------------------------------------------------------------

_CONTENT_TYPES = {".html": "text/html; charset=utf-8",
                  ".js": "text/javascript", ".mjs": "text/javascript",
                  ".css": "text/css", ".map": "application/json",
                  ".json": "application/json", ".ico": "image/x-icon",
                  ".png": "image/png", ".svg": "image/svg+xml"}


class TrainerServer:
    """Threaded session server: plain TCP lines or WebSocket, sniffed.

    Plain HTTP GETs (no upgrade) are answered from ``static_dir`` when
    configured, so the browser client can be served from the same port.
    """

    def __init__(self, host: str, port: int, chart: Chart,
                 layout_kind: LayoutKind,
                 window_ms: int = DEFAULT_WINDOW_MS,
                 model: Optional[HandpanModel] = None,
                 static_dir: Optional[str] = None,
                 on_result: Optional[Callable[[TrialResult], None]] = None,
                 **engine_kwargs):
        self.chart = chart
        self.layout = build_layout(layout_kind, model or handpan_model(), chart)
        self.window_ms = window_ms
        self.engine_kwargs = engine_kwargs
        self.static_dir = Path(static_dir).resolve() if static_dir else None
        self.on_result = on_result
        self.results: list[TrialResult] = []
        self.partials: list[TrialResult] = []  # disconnected mid-session
        self._lock = threading.Lock()
        self._sock = socket.create_server((host, port))
        self.port = self._sock.getsockname()[1]
        self._closing = False

    def _make_engine(self) -> LiveSession:
        return LiveSession(self.chart, self.layout, self.window_ms,
                           **self.engine_kwargs)

    def _record(self, result: TrialResult) -> None:
        with self._lock:
            self.results.append(result)
        if self.on_result:
            self.on_result(result)

    def _serve_static(self, sock: socket.socket, path: str) -> None:
        status, body, ctype = "404 Not Found", b"not found\n", "text/plain"
        if self.static_dir is not None:
            rel = path.split("?", 1)[0].lstrip("/") or "index.html"
            target = (self.static_dir / rel).resolve()
            inside = self.static_dir == target.parent or self.static_dir in target.parents
            if target.is_file() and inside:
                body = target.read_bytes()
                ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
                status = "200 OK"
        head = (f"HTTP/1.1 {status}\r\nContent-Type: {ctype}\r\n"
                f"Content-Length: {len(body)}\r\nConnection: close\r\n\r\n")
        sock.sendall(head.encode("ascii") + body)
        sock.close()

    def _handshake_ws(self, sock: socket.socket, header_blob: bytes) -> _WebSocketChannel:
        headers = {}
        for raw in header_blob.split(b"\r\n")[1:]:
            if b":" in raw:
                k, v = raw.split(b":", 1)
                headers[k.strip().lower()] = v.strip()
        key = headers.get(b"sec-websocket-key")
        if key is None:
            raise ProtocolViolationError("websocket upgrade without key")
        accept = base64.b64encode(
            hashlib.sha1(key + _WS_GUID.encode("ascii")).digest()).decode("ascii")
        sock.sendall((
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {accept}\r\n\r\n").encode("ascii"))
        return _WebSocketChannel(sock, b"")

    def _handle(self, sock: socket.socket) -> None:
        try:
            sock.settimeout(10.0)
            first = b""
            while b"\n" not in first:
                data = sock.recv(4096)
                if not data:
                    sock.close()
                    return
                first += data
            if first.startswith(b"GET "):
                while b"\r\n\r\n" not in first:  # read the full header block
                    data = sock.recv(4096)
                    if not data:
                        sock.close()
                        return
                    first += data
                head, residue = first.split(b"\r\n\r\n", 1)
                lower = head.lower()
                if b"upgrade:" in lower and b"websocket" in lower:
                    channel = self._handshake_ws(sock, head)
                    channel.buf = residue
                    result = run_session(channel, self._make_engine())
                    self._record(result)
                else:
                    path = head.split(b"\r\n", 1)[0].split(b" ")[1].decode("utf-8")
                    self._serve_static(sock, path)
                return
            # plain TCP line protocol; replay already-read bytes
            channel = _LineChannel(sock)
            channel.buf = first
            result = run_session(channel, self._make_engine())
            self._record(result)
        except ClientDisconnectedError as exc:
            if exc.partial is not None:
                with self._lock:
                    self.partials.append(exc.partial)
        except (ProtocolViolationError, BadMessageError, OSError):
            try:
                sock.close()
            except OSError:
                pass

    def serve_forever(self) -> None:
        while not self._closing:
            try:
                conn, _ = self._sock.accept()
            except OSError:
                break
            threading.Thread(target=self._handle, args=(conn,), daemon=True).start()

    def close(self) -> None:
        self._closing = True
        try:
            self._sock.close()
        except OSError:
            pass
