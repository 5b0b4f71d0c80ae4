"""Length-prefixed request/reply message protocol.

Each frame is a 4-byte big-endian payload length followed by exactly that many
bytes of UTF-8 text.  The text is a canonical JSON document: one object with a
`type` field naming the message and a `body` object, keys emitted in sorted
order, ASCII-only output, and numbers in their shortest faithful form
(integral values without a decimal point, other floats via shortest
round-trip decimal).  Canonical output makes byte-exact golden transcripts
possible; input parsing is tolerant of non-canonical key order.
"""

from __future__ import annotations

import json
import math
import socket
import struct
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import spaces
from .spaces import (
    Box,
    BoxValue,
    Container,
    DictSpace,
    DictValue,
    Discrete,
    DiscreteValue,
    Space,
    SpaceError,
    TupleSpace,
    TupleValue,
)

MAX_FRAME_BYTES = 16 * 1024 * 1024
DONE_REASONS = ("", "GameOver", "SimulationEnd")


class WireError(Exception):
    """Base class for everything that can go wrong on the wire."""


class FramingError(WireError):
    """Frame truncated or connection closed mid-frame."""


class SizeError(WireError):
    """Frame length outside the allowed range."""


class ParseError(WireError):
    """Payload is not a well-formed message document."""


class ProtocolError(WireError):
    """Structurally valid document with an unknown or unexpected meaning."""


class TransportError(WireError):
    """Connection-level failure while a reply was pending."""


class RemoteError(WireError):
    """Peer answered with an error_resp."""

    def __init__(self, code: str, detail: str):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


# ---------------------------------------------------------------------------
# Messages


@dataclass(frozen=True)
class InitReq:
    args: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class InitResp:
    observation_space: Space
    action_space: Space


@dataclass(frozen=True)
class ResetReq:
    pass


@dataclass(frozen=True)
class ResetResp:
    observation: Container


@dataclass(frozen=True)
class StepReq:
    action: Container


@dataclass(frozen=True)
class StepResp:
    observation: Container
    reward: float
    done: bool
    done_reason: str
    info: str

    def __post_init__(self):
        # Rewards are 32-bit floats on the wire.
        object.__setattr__(self, "reward", float(np.float32(self.reward)))
        if self.done_reason not in DONE_REASONS:
            raise ValueError(f"bad done_reason {self.done_reason!r}")


@dataclass(frozen=True)
class CloseReq:
    pass


@dataclass(frozen=True)
class CloseResp:
    pass


@dataclass(frozen=True)
class ErrorResp:
    code: str
    detail: str


Message = Union[
    InitReq, InitResp, ResetReq, ResetResp, StepReq, StepResp, CloseReq, CloseResp, ErrorResp
]

_TYPE_NAMES = {
    InitReq: "init_req",
    InitResp: "init_resp",
    ResetReq: "reset_req",
    ResetResp: "reset_resp",
    StepReq: "step_req",
    StepResp: "step_resp",
    CloseReq: "close_req",
    CloseResp: "close_resp",
    ErrorResp: "error_resp",
}


# ---------------------------------------------------------------------------
# Canonical JSON


def canon_number(x) -> str:
    """Shortest faithful decimal form: integral values without a fraction."""
    if isinstance(x, bool):
        raise TypeError("bool is not a number here")
    if isinstance(x, int):
        return str(x)
    if not math.isfinite(x):
        raise ParseError("non-finite numbers cannot be encoded")
    if x == int(x) and abs(x) <= 2**53:
        return str(int(x))
    return repr(x)


def canonical_json(obj) -> str:
    """Serialize a JSON tree deterministically (sorted keys, shortest numbers)."""
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, (int, float)):
        return canon_number(obj)
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(canonical_json(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: kv[0])
        return "{" + ",".join(f"{json.dumps(k, ensure_ascii=True)}:{canonical_json(v)}" for k, v in items) + "}"
    raise TypeError(f"cannot encode {type(obj).__name__}")


# ---------------------------------------------------------------------------
# Space / container trees


def space_to_tree(s: Space):
    if isinstance(s, Discrete):
        return {"kind": "discrete", "n": s.n}
    if isinstance(s, Box):
        return {
            "kind": "box",
            "low": s.low,
            "high": s.high,
            "shape": list(s.shape),
            "dtype": s.dtype,
        }
    if isinstance(s, TupleSpace):
        return {"kind": "tuple", "children": [space_to_tree(c) for c in s.children]}
    if isinstance(s, DictSpace):
        return {"kind": "dict", "entries": {name: space_to_tree(c) for name, c in s.entries}}
    raise TypeError(f"not a space: {s!r}")


def container_to_tree(c: Container):
    if isinstance(c, DiscreteValue):
        return {"kind": "discrete", "value": c.value}
    if isinstance(c, BoxValue):
        return {"kind": "box", "shape": list(c.shape), "dtype": c.dtype, "data": list(c.data)}
    if isinstance(c, TupleValue):
        return {"kind": "tuple", "items": [container_to_tree(v) for v in c.items]}
    if isinstance(c, DictValue):
        return {"kind": "dict", "entries": {name: container_to_tree(v) for name, v in c.entries}}
    raise TypeError(f"not a container: {c!r}")


def _need(tree: dict, key: str):
    if not isinstance(tree, dict):
        raise ParseError(f"expected object, got {type(tree).__name__}")
    if key not in tree:
        raise ParseError(f"missing field {key!r}")
    return tree[key]


def space_from_tree(tree) -> Space:
    kind = _need(tree, "kind")
    try:
        if kind == "discrete":
            return Discrete(_need(tree, "n"))
        if kind == "box":
            shape = _need(tree, "shape")
            if not isinstance(shape, list):
                raise ParseError("box shape must be a list")
            return Box(
                low=_need(tree, "low"),
                high=_need(tree, "high"),
                shape=tuple(shape),
                dtype=_need(tree, "dtype"),
            )
        if kind == "tuple":
            children = _need(tree, "children")
            if not isinstance(children, list):
                raise ParseError("tuple children must be a list")
            return TupleSpace(tuple(space_from_tree(c) for c in children))
        if kind == "dict":
            entries = _need(tree, "entries")
            if not isinstance(entries, dict):
                raise ParseError("dict entries must be an object")
            return DictSpace({name: space_from_tree(c) for name, c in entries.items()})
    except SpaceError as e:
        raise ParseError(str(e)) from e
    raise ParseError(f"unknown space kind {kind!r}")


def container_from_tree(tree) -> Container:
    kind = _need(tree, "kind")
    try:
        if kind == "discrete":
            return DiscreteValue(_need(tree, "value"))
        if kind == "box":
            shape = _need(tree, "shape")
            data = _need(tree, "data")
            if not isinstance(shape, list) or not isinstance(data, list):
                raise ParseError("box shape and data must be lists")
            return BoxValue(shape=tuple(shape), dtype=_need(tree, "dtype"), data=tuple(data))
        if kind == "tuple":
            items = _need(tree, "items")
            if not isinstance(items, list):
                raise ParseError("tuple items must be a list")
            return TupleValue(tuple(container_from_tree(v) for v in items))
        if kind == "dict":
            entries = _need(tree, "entries")
            if not isinstance(entries, dict):
                raise ParseError("dict entries must be an object")
            return DictValue({name: container_from_tree(v) for name, v in entries.items()})
    except SpaceError as e:
        raise ParseError(str(e)) from e
    raise ParseError(f"unknown container kind {kind!r}")


# ---------------------------------------------------------------------------
# Message <-> tree


def _message_to_tree(m: Message) -> dict:
    if isinstance(m, InitReq):
        for k, v in m.args.items():
            if not isinstance(k, str) or not isinstance(v, str):
                raise TypeError("init args must map strings to strings")
        body = {"args": dict(m.args)}
    elif isinstance(m, InitResp):
        body = {
            "observation_space": space_to_tree(m.observation_space),
            "action_space": space_to_tree(m.action_space),
        }
    elif isinstance(m, ResetResp):
        body = {"observation": container_to_tree(m.observation)}
    elif isinstance(m, StepReq):
        body = {"action": container_to_tree(m.action)}
    elif isinstance(m, StepResp):
        body = {
            "observation": container_to_tree(m.observation),
            "reward": m.reward,
            "done": m.done,
            "done_reason": m.done_reason,
            "info": m.info,
        }
    elif isinstance(m, ErrorResp):
        body = {"code": m.code, "detail": m.detail}
    elif isinstance(m, (ResetReq, CloseReq, CloseResp)):
        body = {}
    else:
        raise TypeError(f"not a message: {m!r}")
    return {"type": _TYPE_NAMES[type(m)], "body": body}


def _str_field(body, key) -> str:
    v = _need(body, key)
    if not isinstance(v, str):
        raise ParseError(f"field {key!r} must be a string")
    return v


def _message_from_tree(tree) -> Message:
    if not isinstance(tree, dict):
        raise ParseError("message document must be an object")
    mtype = _need(tree, "type")
    body = _need(tree, "body")
    if not isinstance(body, dict):
        raise ParseError("message body must be an object")
    if mtype == "init_req":
        args = body.get("args", {})
        if not isinstance(args, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in args.items()
        ):
            raise ParseError("init_req args must map strings to strings")
        return InitReq(args=dict(args))
    if mtype == "init_resp":
        return InitResp(
            observation_space=space_from_tree(_need(body, "observation_space")),
            action_space=space_from_tree(_need(body, "action_space")),
        )
    if mtype == "reset_req":
        return ResetReq()
    if mtype == "reset_resp":
        return ResetResp(observation=container_from_tree(_need(body, "observation")))
    if mtype == "step_req":
        return StepReq(action=container_from_tree(_need(body, "action")))
    if mtype == "step_resp":
        reward = _need(body, "reward")
        done = _need(body, "done")
        if isinstance(reward, bool) or not isinstance(reward, (int, float)):
            raise ParseError("reward must be a number")
        if not isinstance(done, bool):
            raise ParseError("done must be a boolean")
        reason = _str_field(body, "done_reason")
        if reason not in DONE_REASONS:
            raise ParseError(f"bad done_reason {reason!r}")
        return StepResp(
            observation=container_from_tree(_need(body, "observation")),
            reward=float(reward),
            done=done,
            done_reason=reason,
            info=_str_field(body, "info"),
        )
    if mtype == "close_req":
        return CloseReq()
    if mtype == "close_resp":
        return CloseResp()
    if mtype == "error_resp":
        return ErrorResp(code=_str_field(body, "code"), detail=_str_field(body, "detail"))
    raise ProtocolError(f"unknown message type {mtype!r}")


# ---------------------------------------------------------------------------
# Framing


def encode_payload(m: Message) -> bytes:
    return canonical_json(_message_to_tree(m)).encode("ascii")


def encode(m: Message) -> bytes:
    """Message -> length-prefixed frame bytes."""
    payload = encode_payload(m)
    if len(payload) > MAX_FRAME_BYTES:
        raise SizeError(f"payload of {len(payload)} bytes exceeds {MAX_FRAME_BYTES}")
    return struct.pack(">I", len(payload)) + payload


def decode_payload(payload: bytes) -> Message:
    try:
        text = payload.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(f"payload is not UTF-8: {e}") from e
    try:
        tree = json.loads(text)
    except (json.JSONDecodeError, RecursionError) as e:
        raise ParseError(f"payload is not valid JSON: {e}") from e
    return _message_from_tree(tree)


def decode(buf: bytes) -> Message:
    """Length-prefixed frame bytes -> Message; inverse of encode on canonical frames."""
    if len(buf) < 4:
        raise FramingError(f"frame header needs 4 bytes, got {len(buf)}")
    (length,) = struct.unpack(">I", buf[:4])
    if length > MAX_FRAME_BYTES:
        raise SizeError(f"declared payload of {length} bytes exceeds {MAX_FRAME_BYTES}")
    if len(buf) - 4 != length:
        raise FramingError(f"declared {length} payload bytes, got {len(buf) - 4}")
    return decode_payload(buf[4:])


def _recv_exact(sock: socket.socket, n: int) -> Optional[bytes]:
    """Read exactly n bytes; None on clean EOF before the first byte."""
    chunks = []
    remaining = n
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            if remaining == n:
                return None
            raise FramingError(f"connection closed with {remaining} of {n} bytes pending")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(sock: socket.socket) -> Optional[bytes]:
    """Read one frame payload; None on clean EOF at a frame boundary."""
    header = _recv_exact(sock, 4)
    if header is None:
        return None
    (length,) = struct.unpack(">I", header)
    if length > MAX_FRAME_BYTES:
        raise SizeError(f"declared payload of {length} bytes exceeds {MAX_FRAME_BYTES}")
    if length == 0:
        return b""
    payload = _recv_exact(sock, length)
    if payload is None:
        raise FramingError("connection closed after frame header")
    return payload


def write_frame(sock: socket.socket, payload: bytes) -> None:
    if len(payload) > MAX_FRAME_BYTES:
        raise SizeError(f"payload of {len(payload)} bytes exceeds {MAX_FRAME_BYTES}")
    sock.sendall(struct.pack(">I", len(payload)) + payload)


class Connection:
    """Client side of one strict request/reply session.

    Exactly one request may be in flight; attempting to pipeline a second is
    rejected locally before anything reaches the socket.
    """

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._awaiting_reply = False
        self._closed = False

    def send_request(self, m: Message) -> None:
        if self._closed:
            raise TransportError("connection is closed")
        if self._awaiting_reply:
            raise ProtocolError("a request is already outstanding on this connection")
        self._awaiting_reply = True
        try:
            self._sock.sendall(encode(m))
        except OSError as e:
            self._awaiting_reply = False
            raise TransportError(f"send failed: {e}") from e

    def recv_reply(self) -> Message:
        if not self._awaiting_reply:
            raise ProtocolError("no request outstanding")
        try:
            payload = read_frame(self._sock)
        except OSError as e:
            raise TransportError(f"receive failed: {e}") from e
        finally:
            self._awaiting_reply = False
        if payload is None:
            raise TransportError("peer closed the connection while a reply was pending")
        return decode_payload(payload)

    def roundtrip(self, m: Message) -> Message:
        """One request, one reply; the reply may be an ErrorResp."""
        self.send_request(m)
        return self.recv_reply()

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            try:
                self._sock.close()
            except OSError:
                pass


def request_reply(conn: Connection, m: Message) -> Message:
    """Strict exchange raising RemoteError when the peer reports a failure."""
    reply = conn.roundtrip(m)
    if isinstance(reply, ErrorResp):
        raise RemoteError(reply.code, reply.detail)
    return reply
