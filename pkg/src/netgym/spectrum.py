"""Slotted multi-channel spectrum with a periodic sweeping interferer.

One interferer occupies exactly one channel per time slot, sweeping upward
through channels 1..num_channels and wrapping around.  Sensing is noiseless
wideband occupancy: a 0/1 flag per channel.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SpectrumConfig:
    num_channels: int = 4
    slot_ticks: int = 1_000_000

    def __post_init__(self):
        if self.num_channels < 2:
            raise ValueError("spectrum needs at least two channels")
        if self.slot_ticks < 1:
            raise ValueError("slot duration must be >= 1 tick")


def interferer_channel(slot: int, num_channels: int = 4) -> int:
    """Channel (1-based) occupied by the sweeping interferer in `slot`."""
    if slot < 1:
        raise ValueError("slots are numbered from 1")
    return (slot - 1) % num_channels + 1


def sense(slot: int, num_channels: int = 4) -> list[int]:
    """Wideband occupancy for `slot`: one entry per channel, exactly one set."""
    busy = interferer_channel(slot, num_channels)
    return [1 if ch == busy else 0 for ch in range(1, num_channels + 1)]


def check_collision(chosen_channel: int, slot: int, num_channels: int = 4) -> bool:
    """True iff transmitting on `chosen_channel` during `slot` hits the interferer."""
    if not 1 <= chosen_channel <= num_channels:
        raise ValueError(f"channel {chosen_channel} outside 1..{num_channels}")
    return chosen_channel == interferer_channel(slot, num_channels)
