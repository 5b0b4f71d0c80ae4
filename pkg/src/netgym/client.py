"""Agent-side environment handle speaking the wire protocol.

`make` either connects to a pre-started server (``tcp://host:port``) or
spawns a server command and waits for its ``LISTENING <port>`` line, then
performs the init exchange and caches the two spaces.  The returned handle
mirrors the usual step-loop surface: reset/step/close, with step returning
the full (observation, reward, done, done_reason, info) bundle.
"""

from __future__ import annotations

import os
import re
import select
import shlex
import socket
import subprocess
import time
from typing import Optional, Sequence, Union

from .bridge import ActionRejectedError, EpisodeOverError, LifecycleError, StepResult
from .protocol import (
    CloseReq,
    CloseResp,
    Connection,
    InitReq,
    InitResp,
    ResetReq,
    ResetResp,
    StepReq,
    StepResp,
    ProtocolError,
    request_reply,
)
from .spaces import Container, conforms

DEFAULT_TIMEOUT = 10.0
_LISTENING_RE = re.compile(rb"LISTENING (\d+)")


class StartupError(RuntimeError):
    """Could not bring up or reach an environment server."""


def _await_listening(proc: subprocess.Popen, timeout: float) -> int:
    """Wait for the spawned server to announce its port."""
    assert proc.stdout is not None
    fd = proc.stdout.fileno()
    os.set_blocking(fd, False)
    deadline = time.monotonic() + timeout
    buf = b""
    while True:
        match = _LISTENING_RE.search(buf)
        if match:
            return int(match.group(1))
        if proc.poll() is not None:
            try:
                buf += proc.stdout.read() or b""
            except OSError:
                pass
            raise StartupError(
                f"server exited with status {proc.returncode} before listening; "
                f"output: {buf.decode(errors='replace').strip()!r}"
            )
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            raise StartupError(f"server did not announce LISTENING within {timeout} s")
        ready, _, _ = select.select([fd], [], [], min(remaining, 0.05))
        if ready:
            chunk = proc.stdout.read()
            if chunk:
                buf += chunk


def _parse_endpoint(endpoint: str) -> tuple[str, int]:
    m = re.fullmatch(r"tcp://([^:/]+):(\d+)", endpoint)
    if not m:
        raise StartupError(f"bad endpoint {endpoint!r}; expected tcp://host:port")
    return m.group(1), int(m.group(2))


class RemoteEnv:
    """One environment session over one TCP connection."""

    def __init__(
        self,
        conn: Connection,
        observation_space,
        action_space,
        child: Optional[subprocess.Popen] = None,
    ):
        self._conn = conn
        self.observation_space = observation_space
        self.action_space = action_space
        self._child = child
        self._started = False
        self._done = False
        self._closed = False

    def reset(self) -> Container:
        self._check_open()
        reply = request_reply(self._conn, ResetReq())
        if not isinstance(reply, ResetResp):
            raise ProtocolError(f"expected reset_resp, got {type(reply).__name__}")
        if not conforms(reply.observation, self.observation_space):
            raise ProtocolError("initial observation does not conform to the observation space")
        self._started = True
        self._done = False
        return reply.observation

    def step(self, action: Container) -> StepResult:
        self._check_open()
        if not self._started:
            raise LifecycleError("reset the environment before stepping")
        if self._done:
            raise EpisodeOverError("episode is over; reset to continue")
        if not conforms(action, self.action_space):
            raise ActionRejectedError("action does not conform to the action space")
        reply = request_reply(self._conn, StepReq(action))
        if not isinstance(reply, StepResp):
            raise ProtocolError(f"expected step_resp, got {type(reply).__name__}")
        if not conforms(reply.observation, self.observation_space):
            raise ProtocolError("step observation does not conform to the observation space")
        if reply.done:
            self._done = True
        return StepResult(
            observation=reply.observation,
            reward=reply.reward,
            done=reply.done,
            done_reason=reply.done_reason,
            info=reply.info,
        )

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        try:
            reply = self._conn.roundtrip(CloseReq())
            if not isinstance(reply, CloseResp):
                pass  # best effort; the session is going away either way
        except Exception:
            pass
        finally:
            self._conn.close()
            if self._child is not None:
                try:
                    self._child.wait(timeout=5)
                except subprocess.TimeoutExpired:
                    self._child.kill()
                    self._child.wait()

    def _check_open(self) -> None:
        if self._closed:
            raise LifecycleError("environment is closed")


def make(
    target: Union[str, Sequence[str]],
    args: Optional[dict[str, str]] = None,
    connect_timeout: float = DEFAULT_TIMEOUT,
) -> RemoteEnv:
    """Create an environment handle.

    `target` is either an endpoint string ``tcp://host:port`` or a server
    command (argv list, or a single shell-style string) that is spawned and
    expected to print ``LISTENING <port>``.  `args` are passed in the init
    message to adjust scenario parameters.
    """
    child: Optional[subprocess.Popen] = None
    if isinstance(target, str) and target.startswith("tcp://"):
        host, port = _parse_endpoint(target)
    else:
        argv = shlex.split(target) if isinstance(target, str) else list(target)
        if not argv:
            raise StartupError("empty spawn command")
        try:
            child = subprocess.Popen(
                argv, stdout=subprocess.PIPE, stderr=subprocess.STDOUT
            )
        except OSError as e:
            raise StartupError(f"cannot spawn {argv[0]!r}: {e}") from e
        try:
            port = _await_listening(child, connect_timeout)
        except StartupError:
            if child.poll() is None:
                child.kill()
                child.wait()
            raise
        host = "127.0.0.1"
    try:
        sock = socket.create_connection((host, port), timeout=connect_timeout)
    except OSError as e:
        if child is not None and child.poll() is None:
            child.kill()
            child.wait()
        raise StartupError(f"cannot connect to {host}:{port}: {e}") from e
    sock.settimeout(None)
    conn = Connection(sock)
    reply = request_reply(conn, InitReq(args=dict(args or {})))
    if not isinstance(reply, InitResp):
        raise ProtocolError(f"expected init_resp, got {type(reply).__name__}")
    return RemoteEnv(conn, reply.observation_space, reply.action_space, child=child)
