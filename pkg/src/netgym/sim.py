"""Deterministic discrete-event simulation core.

Virtual time is an integer count of nanosecond ticks, which keeps replays
bit-identical across platforms.  Randomness comes from small counter-based
SplitMix64 streams implemented here rather than from any platform RNG, so a
given (seed, stream_id) pair yields the same draw sequence everywhere.
"""

from __future__ import annotations

import heapq
from typing import Callable

MAX_TICKS = 2**64 - 1

_MASK64 = 0xFFFFFFFFFFFFFFFF
# SplitMix64 constants (Steele, Lea & Flood; as used in Java's SplittableRandom).
SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_MIX_M1 = 0xBF58476D1CE4E5B9
_MIX_M2 = 0x94D049BB133111EB
# Seed/stream whitening constants (wyhash secrets).
_SEED_SALT = 0xA0761D6478BD642F
_STREAM_SALT = 0xE7037ED1A0B428DB


def mix64(x: int) -> int:
    """SplitMix64 output function: avalanche a 64-bit word."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * _MIX_M1) & _MASK64
    x = ((x ^ (x >> 27)) * _MIX_M2) & _MASK64
    return x ^ (x >> 31)


def stream_state(seed: int, stream_id: int) -> int:
    """Initial SplitMix64 counter for an independent (seed, stream_id) stream."""
    return mix64(seed + _SEED_SALT) ^ mix64(stream_id + _STREAM_SALT)


class RngStream:
    """Counter-based SplitMix64 stream.

    The stream is a counter advanced by a fixed odd gamma; each output is the
    mixed counter.  State is a single 64-bit word, cheap to snapshot and to
    hand to numeric kernels (see netgym._mesh_kernels, which advances the
    identical sequence).
    """

    __slots__ = ("seed", "stream_id", "_state")

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = seed
        self.stream_id = stream_id
        self._state = stream_state(seed, stream_id)

    @property
    def state(self) -> int:
        return self._state

    def set_state(self, state: int) -> None:
        self._state = state & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + SPLITMIX_GAMMA) & _MASK64
        return mix64(self._state)

    def uniform_int(self, low: int, high: int) -> int:
        """Uniform integer in [low, high], both ends inclusive."""
        if high < low:
            raise ValueError(f"empty integer range [{low}, {high}]")
        span = high - low + 1
        return low + self.next_u64() % span

    def uniform_f64(self, low: float = 0.0, high: float = 1.0) -> float:
        # 53 random mantissa bits -> uniform on [0, 1).
        u = self.next_u64() >> 11
        return low + (u * 2.0**-53) * (high - low)


class SimTimeOverflowError(OverflowError):
    """Scheduling past the representable 64-bit tick range."""


class _Event:
    __slots__ = ("fire_at", "sequence", "action", "cancelled")

    def __init__(self, fire_at: int, sequence: int, action: Callable[[], None]):
        self.fire_at = fire_at
        self.sequence = sequence
        self.action = action
        self.cancelled = False

    def __lt__(self, other: "_Event") -> bool:
        # Equal fire times break ties by insertion order (FIFO).
        return (self.fire_at, self.sequence) < (other.fire_at, other.sequence)


class Engine:
    """Single-threaded discrete-event engine.

    Events execute in (fire_at, insertion sequence) order.  One engine backs
    one environment episode; independent episodes use independent engines.
    """

    def __init__(self):
        self._now = 0
        self._seq = 0
        self._heap: list[_Event] = []
        self._events: dict[int, _Event] = {}
        self._break_requested = False

    @property
    def now(self) -> int:
        return self._now

    def schedule(self, delay: int, action: Callable[[], None]) -> int:
        """Schedule `action` to fire `delay` ticks from now; returns an event id."""
        if delay < 0:
            raise ValueError(f"negative delay {delay}")
        fire_at = self._now + delay
        if fire_at > MAX_TICKS:
            raise SimTimeOverflowError(f"event time {fire_at} exceeds tick range")
        self._seq += 1
        ev = _Event(fire_at, self._seq, action)
        heapq.heappush(self._heap, ev)
        self._events[self._seq] = ev
        return self._seq

    def cancel(self, event_id: int) -> None:
        ev = self._events.pop(event_id, None)
        if ev is not None:
            ev.cancelled = True

    def request_break(self) -> None:
        """Ask the running loop to stop after the current event returns."""
        self._break_requested = True

    def run_until(self, t: int, breakable: bool = False) -> bool:
        """Execute all events with fire_at <= t in order.

        Returns True when the horizon was reached (clock == t).  With
        `breakable`, an executing event may call request_break(); the loop
        then stops with the clock at that event's fire time and returns
        False, leaving later events pending.
        """
        if t < self._now:
            raise ValueError(f"cannot run backwards to {t} (now {self._now})")
        while self._heap and self._heap[0].fire_at <= t:
            ev = heapq.heappop(self._heap)
            if ev.cancelled:
                continue
            self._events.pop(ev.sequence, None)
            self._now = ev.fire_at
            ev.action()
            if breakable and self._break_requested:
                self._break_requested = False
                return False
        self._now = t
        return True
