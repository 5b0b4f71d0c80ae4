"""Slot-loop kernels for the linear-mesh MAC model.

Two interchangeable implementations of the same slot rules:

* a numba ``@njit`` kernel (scalar loops, wrapping uint64 arithmetic), and
* a pure-numpy fallback (per-slot vectorized array ops).

Both advance the identical SplitMix64 draw sequence and produce bit-identical
state, so either can back a simulation.  Selection: the numba path is used
when numba imports cleanly, unless the environment variable ``NETGYM_NUMBA``
is set to ``0``/``false``/``no``.  ``benchmarks/bench_mesh_kernel.py``
compares the two.

Slot rules (applied once per slot, in this order):

1. saturation refill: the source queue is topped back up to one packet;
2. every sender (nodes 0..n-2) with a queued packet and zero backoff
   transmits to its next hop;
3. a transmission succeeds iff no other transmitter sits within
   ``interference_range`` hops of the receiver;
4. successful senders dequeue, then receivers enqueue (the final hop counts a
   delivery; a full queue counts a drop);
5. every transmitter redraws backoff uniformly in {0..cw}, in ascending node
   order (one RNG draw each); every other node with pending backoff counts
   down by one.
"""

from __future__ import annotations

import os

import numpy as np

from .sim import SPLITMIX_GAMMA, _MASK64

_GAMMA = np.uint64(SPLITMIX_GAMMA)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)


def _run_slots_loop(n_slots, queues, cw, backoff, counters, tx_count, success_count,
                    rng_state, interference_range, queue_capacity):
    """Scalar-loop kernel in numba-compilable form.

    counters layout: [delivered, injected, dropped].  Mutates the arrays in
    place and returns the advanced RNG state.
    """
    n = queues.shape[0]
    tx = np.zeros(n, np.bool_)
    ok = np.zeros(n, np.bool_)
    state = rng_state
    for _ in range(n_slots):
        if queues[0] == 0:
            queues[0] = 1
            counters[1] += 1
        for i in range(n):
            tx[i] = i < n - 1 and queues[i] > 0 and backoff[i] == 0
        for i in range(n):
            ok[i] = False
            if tx[i]:
                receiver = i + 1
                clear = True
                for j in range(n - 1):
                    if tx[j] and j != i:
                        gap = receiver - j if receiver >= j else j - receiver
                        if gap <= interference_range:
                            clear = False
                            break
                ok[i] = clear
        for i in range(n):
            if ok[i]:
                queues[i] -= 1
        for i in range(n):
            if ok[i]:
                receiver = i + 1
                if receiver == n - 1:
                    counters[0] += 1
                elif queues[receiver] < queue_capacity:
                    queues[receiver] += 1
                else:
                    counters[2] += 1
        for i in range(n):
            if tx[i]:
                state = state + _GAMMA
                z = state
                z = (z ^ (z >> _S30)) * _M1
                z = (z ^ (z >> _S27)) * _M2
                z = z ^ (z >> _S31)
                backoff[i] = np.int64(z % np.uint64(cw[i] + 1))
                tx_count[i] += 1
                if ok[i]:
                    success_count[i] += 1
            elif backoff[i] > 0:
                backoff[i] -= 1
    return state


def run_slots_fallback(n_slots, queues, cw, backoff, counters, tx_count, success_count,
                       rng_state, interference_range, queue_capacity):
    """Vectorized numpy implementation of the same slot rules."""
    n = queues.shape[0]
    state = int(rng_state)
    for _ in range(n_slots):
        if queues[0] == 0:
            queues[0] = 1
            counters[1] += 1
        tx = (queues > 0) & (backoff == 0)
        tx[n - 1] = False
        tx_idx = np.nonzero(tx)[0]
        k = tx_idx.size
        if k:
            recv = tx_idx + 1
            # gap[j, i] = |transmitter_j - receiver_i|, self-pairs masked out
            gap = np.abs(tx_idx[:, None] - recv[None, :])
            gap[np.arange(k), np.arange(k)] = interference_range + 1
            ok = (gap > interference_range).all(axis=0)

            succ = tx_idx[ok]
            queues[succ] -= 1
            recv_ok = succ + 1
            counters[0] += int((recv_ok == n - 1).sum())
            fwd = recv_ok[recv_ok != n - 1]
            room = queues[fwd] < queue_capacity
            queues[fwd[room]] += 1
            counters[2] += int((~room).sum())

            # one SplitMix64 draw per transmitter, ascending node order
            steps = np.arange(1, k + 1, dtype=np.uint64)
            words = np.uint64(state) + steps * _GAMMA
            words = (words ^ (words >> _S30)) * _M1
            words = (words ^ (words >> _S27)) * _M2
            words = words ^ (words >> _S31)
            state = (state + k * SPLITMIX_GAMMA) & _MASK64

            countdown = ~tx & (backoff > 0)
            backoff[countdown] -= 1
            backoff[tx_idx] = (words % (cw[tx_idx] + 1).astype(np.uint64)).astype(np.int64)
            tx_count[tx_idx] += 1
            success_count[succ] += 1
        else:
            backoff[backoff > 0] -= 1
    return np.uint64(state)


def _env_wants_numba() -> bool:
    return os.environ.get("NETGYM_NUMBA", "1").strip().lower() not in ("0", "false", "no")


run_slots_njit = None
if _env_wants_numba():
    try:
        from numba import njit

        run_slots_njit = njit(cache=True)(_run_slots_loop)
    except ImportError:
        run_slots_njit = None

USING_NUMBA = run_slots_njit is not None
run_slots = run_slots_njit if USING_NUMBA else run_slots_fallback
