"""Asyncio relay server speaking two transports on one port.

A connection whose first line is an HTTP GET is upgraded to a WebSocket
(RFC 6455, text frames, one JSON message per frame).  Anything else is
treated as line-delimited JSON: one message per newline-terminated line.
Both transports carry the same message schema and hit the same engine, so
a browser client and a scripted test client are interchangeable.

Accepted keystrokes are appended to ``<log_dir>/<session>.jsonl`` as they
arrive, one event per line, flushed per write; a crashed server can be
restarted with ``resume_from_log`` and keeps sequence numbers contiguous.
"""

from __future__ import annotations

import asyncio
import base64
import hashlib
import json
import os

from .core import Role
from .corpus import event_to_json_line
from .service import ServiceError, SessionRegistry

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
_MAX_FRAME = 1 << 20  # plenty for single-keystroke traffic


class ConnectionClosed(Exception):
    pass


class LineTransport:
    """One JSON object per newline-terminated line."""

    def __init__(self, reader, writer, first_line: bytes | None = None):
        self.reader = reader
        self.writer = writer
        self._pending = first_line

    async def recv(self) -> dict | None:
        if self._pending is not None:
            line, self._pending = self._pending, None
        else:
            line = await self.reader.readline()
        if not line:
            return None
        text = line.decode("utf-8", errors="replace").strip()
        if not text:
            return await self.recv()
        return json.loads(text)

    async def send(self, message: dict):
        self.writer.write(json.dumps(message, separators=(",", ":")).encode("utf-8") + b"\n")
        await self.writer.drain()

    async def close(self):
        self.writer.close()


class WebSocketTransport:
    """Minimal RFC 6455 server endpoint: text, ping/pong, close, fragments."""

    def __init__(self, reader, writer):
        self.reader = reader
        self.writer = writer

    @classmethod
    async def handshake(cls, reader, writer, request_line: bytes):
        headers = {}
        while True:
            line = await reader.readline()
            if line in (b"\r\n", b"\n", b""):
                break
            name, _, value = line.decode("latin-1").partition(":")
            headers[name.strip().lower()] = value.strip()
        key = headers.get("sec-websocket-key")
        if not key or "websocket" not in headers.get("upgrade", "").lower():
            writer.write(b"HTTP/1.1 400 Bad Request\r\nConnection: close\r\n\r\n")
            await writer.drain()
            raise ConnectionClosed("not a websocket upgrade")
        accept = base64.b64encode(hashlib.sha1((key + _WS_GUID).encode("ascii")).digest()).decode("ascii")
        writer.write(
            (
                "HTTP/1.1 101 Switching Protocols\r\n"
                "Upgrade: websocket\r\n"
                "Connection: Upgrade\r\n"
                "Sec-WebSocket-Accept: %s\r\n\r\n" % accept
            ).encode("ascii")
        )
        await writer.drain()
        return cls(reader, writer)

    async def _read_frame(self):
        head = await self.reader.readexactly(2)
        fin = bool(head[0] & 0x80)
        opcode = head[0] & 0x0F
        masked = bool(head[1] & 0x80)
        length = head[1] & 0x7F
        if length == 126:
            length = int.from_bytes(await self.reader.readexactly(2), "big")
        elif length == 127:
            length = int.from_bytes(await self.reader.readexactly(8), "big")
        if length > _MAX_FRAME:
            raise ConnectionClosed("frame too large")
        mask = await self.reader.readexactly(4) if masked else None
        payload = await self.reader.readexactly(length)
        if mask:
            payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        return fin, opcode, payload

    async def recv(self) -> dict | None:
        buffer = b""
        while True:
            try:
                fin, opcode, payload = await self._read_frame()
            except (asyncio.IncompleteReadError, ConnectionResetError):
                return None
            if opcode == 0x8:  # close
                await self._send_raw(0x8, b"")
                return None
            if opcode == 0x9:  # ping
                await self._send_raw(0xA, payload)
                continue
            if opcode == 0xA:  # unsolicited pong
                continue
            if opcode in (0x1, 0x2, 0x0):
                buffer += payload
                if not fin:
                    continue
                text = buffer.decode("utf-8", errors="replace")
                buffer = b""
                if not text.strip():
                    continue
                return json.loads(text)
            raise ConnectionClosed("unsupported opcode %d" % opcode)

    async def _send_raw(self, opcode: int, payload: bytes):
        header = bytes([0x80 | opcode])
        n = len(payload)
        if n < 126:
            header += bytes([n])
        elif n < 1 << 16:
            header += bytes([126]) + n.to_bytes(2, "big")
        else:
            header += bytes([127]) + n.to_bytes(8, "big")
        self.writer.write(header + payload)
        await self.writer.drain()

    async def send(self, message: dict):
        await self._send_raw(0x1, json.dumps(message, separators=(",", ":")).encode("utf-8"))

    async def close(self):
        try:
            await self._send_raw(0x8, b"")
        except (ConnectionError, RuntimeError):
            pass
        self.writer.close()


class RelayServer:
    def __init__(self, registry: SessionRegistry, log_dir: str | None = None):
        self.registry = registry
        self.log_dir = log_dir
        self.links = {}  # (session_id, Role) -> transport
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)

    # -- delivery

    async def _deliver(self, session_id: str, outgoing):
        for recipients, message in outgoing:
            for role in recipients:
                transport = self.links.get((session_id, role))
                if transport is None:
                    continue
                try:
                    await transport.send(message)
                except (ConnectionError, RuntimeError):
                    self.links.pop((session_id, role), None)

    def _log_last_event(self, session_id: str):
        if not self.log_dir:
            return
        engine = self.registry.get(session_id)
        path = os.path.join(self.log_dir, "%s.jsonl" % session_id)
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(event_to_json_line(engine.events[-1]) + "\n")
            fh.flush()

    # -- per-connection protocol loop

    async def _dispatch(self, transport, message, binding):
        kind = message.get("type")
        if kind == "join":
            if binding["session"] is not None:
                raise ServiceError("malformed", "already joined")
            session_id = message.get("session")
            try:
                role = Role(message.get("role", ""))
            except ValueError:
                raise ServiceError("malformed", "role must be tutor or learner")
            engine = self.registry.get(session_id)
            outgoing = engine.join(role)
            binding["session"] = session_id
            binding["role"] = role
            self.links[(session_id, role)] = transport
            await self._deliver(session_id, outgoing)
            return
        if binding["session"] is None:
            raise ServiceError("malformed", "join first")
        engine = self.registry.get(binding["session"])
        if kind == "key":
            outgoing = engine.relay_key(binding["role"], message.get("ch"), message.get("client_ts", 0))
            if outgoing and outgoing[0][1].get("type") == "key":
                self._log_last_event(binding["session"])
            await self._deliver(binding["session"], outgoing)
            return
        if kind == "advance":
            outgoing = engine.advance(binding["role"])
            await self._deliver(binding["session"], outgoing)
            return
        raise ServiceError("malformed", "unknown message type %r" % kind)

    async def _serve_transport(self, transport):
        binding = {"session": None, "role": None}
        try:
            while True:
                try:
                    message = await transport.recv()
                except (json.JSONDecodeError, UnicodeDecodeError):
                    await transport.send({"type": "error", "code": "malformed"})
                    continue
                if message is None:
                    return
                if not isinstance(message, dict):
                    await transport.send({"type": "error", "code": "malformed"})
                    continue
                try:
                    await self._dispatch(transport, message, binding)
                except ServiceError as err:
                    await transport.send({"type": "error", "code": err.code})
        except (ConnectionClosed, ConnectionError, asyncio.IncompleteReadError):
            return
        finally:
            if binding["session"] is not None:
                key = (binding["session"], binding["role"])
                if self.links.get(key) is transport:
                    self.links.pop(key, None)
                try:
                    self.registry.get(binding["session"]).leave(binding["role"])
                except ServiceError:
                    pass

    async def handle_connection(self, reader, writer):
        try:
            first_line = await reader.readline()
            if not first_line:
                writer.close()
                return
            if first_line.startswith(b"GET "):
                try:
                    transport = await WebSocketTransport.handshake(reader, writer, first_line)
                except ConnectionClosed:
                    writer.close()
                    return
            else:
                transport = LineTransport(reader, writer, first_line=first_line)
            await self._serve_transport(transport)
        finally:
            try:
                writer.close()
            except RuntimeError:
                pass

    async def start(self, host: str = "127.0.0.1", port: int = 0):
        return await asyncio.start_server(self.handle_connection, host, port)


async def serve_forever(registry: SessionRegistry, host: str, port: int, log_dir: str | None):
    server = RelayServer(registry, log_dir)
    listener = await server.start(host, port)
    addr = listener.sockets[0].getsockname()
    print("listening on %s:%d" % (addr[0], addr[1]), flush=True)
    async with listener:
        await listener.serve_forever()
