"""Slotted CSMA/CA linear-chain model with per-node uniform backoff.

A saturated packet flow enters at node 0 and is forwarded hop by hop to the
last node.  Each sender waits a uniform random number of slots in {0..cw}
between transmissions (the window never grows), and a transmission is lost
when any other transmitter is within ``interference_range`` hops of the
receiver, which captures hidden terminals on a chain.  One packet moves per
hop per slot; the destination consumes packets and counts deliveries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _mesh_kernels
from .sim import stream_state

# Stream id used for MAC backoff draws within an episode seed.
MAC_RNG_STREAM = 0

DEFAULT_INITIAL_CW = 15


@dataclass(frozen=True)
class MeshConfig:
    num_nodes: int = 5
    queue_capacity: int = 100
    interference_range: int = 2
    slot_ticks: int = 1_000_000

    def __post_init__(self):
        if self.num_nodes < 2:
            raise ValueError("mesh needs at least two nodes")
        if self.queue_capacity < 1:
            raise ValueError("queue capacity must be >= 1")
        if self.interference_range < 1:
            raise ValueError("interference range must be >= 1")
        if self.slot_ticks < 1:
            raise ValueError("slot duration must be >= 1 tick")


@dataclass(frozen=True)
class SlotOutcome:
    transmitters: tuple[int, ...]
    collisions: tuple[int, ...]
    deliveries: int


class MeshState:
    """Mutable per-episode mesh state driven by the slot kernel.

    All randomness flows from one SplitMix64 stream derived from
    (seed, MAC_RNG_STREAM), so identical (config, seed) pairs replay
    identically regardless of which kernel path is active.
    """

    def __init__(self, config: MeshConfig, seed: int):
        self.config = config
        n = config.num_nodes
        self.queues = np.zeros(n, dtype=np.int64)
        self.cw = np.full(n, DEFAULT_INITIAL_CW, dtype=np.int64)
        self.backoff = np.zeros(n, dtype=np.int64)
        self._counters = np.zeros(3, dtype=np.int64)  # delivered, injected, dropped
        self.tx_count = np.zeros(n, dtype=np.int64)
        self.success_count = np.zeros(n, dtype=np.int64)
        self._rng_state = stream_state(seed, MAC_RNG_STREAM)
        # The source is saturated: it already holds a packet at slot 0.
        self.queues[0] = 1
        self._counters[1] = 1

    @property
    def delivered(self) -> int:
        return int(self._counters[0])

    @property
    def injected(self) -> int:
        return int(self._counters[1])

    @property
    def dropped(self) -> int:
        return int(self._counters[2])

    def queue_lengths(self) -> list[int]:
        return [int(q) for q in self.queues]

    def set_cw(self, node_index: int, cw: int) -> None:
        """Set a node's contention window; a pending countdown is clamped so
        the new bound is effective immediately."""
        if not 0 <= node_index < self.config.num_nodes:
            raise IndexError(f"no node {node_index} in a {self.config.num_nodes}-node mesh")
        if cw < 0:
            raise ValueError("contention window must be >= 0")
        self.cw[node_index] = cw
        if self.backoff[node_index] > cw:
            self.backoff[node_index] = cw

    def set_cw_vector(self, values) -> None:
        for i, v in enumerate(values):
            self.set_cw(i, int(v))

    def run_slots(self, n_slots: int, kernel=None) -> int:
        """Advance the model by n_slots MAC slots; returns packets delivered
        during the call."""
        if n_slots < 0:
            raise ValueError("slot count must be >= 0")
        if n_slots == 0:
            return 0
        fn = kernel if kernel is not None else _mesh_kernels.run_slots
        before = int(self._counters[0])
        self._rng_state = int(
            fn(
                n_slots,
                self.queues,
                self.cw,
                self.backoff,
                self._counters,
                self.tx_count,
                self.success_count,
                np.uint64(self._rng_state),
                self.config.interference_range,
                self.config.queue_capacity,
            )
        )
        return int(self._counters[0]) - before

    def slot_tick(self) -> SlotOutcome:
        """Advance one slot and report who transmitted, who collided, and how
        many packets reached the destination."""
        tx_before = self.tx_count.copy()
        ok_before = self.success_count.copy()
        deliveries = self.run_slots(1)
        txed = np.nonzero(self.tx_count - tx_before)[0]
        succeeded = self.success_count - ok_before
        collided = tuple(int(i) for i in txed if succeeded[i] == 0)
        return SlotOutcome(
            transmitters=tuple(int(i) for i in txed),
            collisions=collided,
            deliveries=deliveries,
        )

    def conservation_holds(self) -> bool:
        """Source injections account for every queued, delivered and dropped
        packet."""
        return self.injected == int(self.queues.sum()) + self.delivered + self.dropped


def graded_cw_vector(num_nodes: int, cw_near_source: int = 3, cw_near_dest: int = 0) -> list[int]:
    """Contention windows decreasing monotonically toward the destination.

    Senders interpolate from cw_near_source down to cw_near_dest; the
    destination entry is 0 (it never transmits).  The defaults give
    [3, 2, 1, 0, 0] on a five-node chain, which outperforms every uniform
    assignment: downstream senders drain the pipeline faster while the
    source still injects at full tilt.
    """
    senders = num_nodes - 1
    if senders == 1:
        vec = [cw_near_dest]
    else:
        span = cw_near_source - cw_near_dest
        vec = [round(cw_near_source - span * i / (senders - 1)) for i in range(senders)]
    return [int(v) for v in vec] + [0]
