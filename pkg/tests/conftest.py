"""Shared test helpers: random space/container generators and server fixtures."""

from __future__ import annotations

import math
import threading
from contextlib import contextmanager

from netgym.bridge import EnvServer
from netgym.envs import EnvSettings, apply_init_args, make_driver
from netgym.sim import RngStream
from netgym.spaces import (
    Box,
    BoxValue,
    DictSpace,
    DictValue,
    Discrete,
    DiscreteValue,
    TupleSpace,
    TupleValue,
    flat_len,
)

_DTYPES = ("u32", "i32", "f32", "f64")


def random_space(rng: RngStream, depth: int = 0):
    """Random space tree; composites get rarer with depth."""
    kinds = ["discrete", "box"]
    if depth < 3:
        kinds += ["tuple", "dict"]
    kind = kinds[rng.uniform_int(0, len(kinds) - 1)]
    if kind == "discrete":
        return Discrete(rng.uniform_int(1, 12))
    if kind == "box":
        dtype = _DTYPES[rng.uniform_int(0, 3)]
        shape = tuple(rng.uniform_int(1, 4) for _ in range(rng.uniform_int(1, 2)))
        if dtype in ("u32", "i32"):
            lo = rng.uniform_int(0 if dtype == "u32" else -50, 20)
            hi = lo + rng.uniform_int(0, 100)
            return Box(lo, hi, shape, dtype)
        lo = rng.uniform_f64(-100.0, 50.0)
        hi = lo + rng.uniform_f64(0.0, 100.0)
        return Box(lo, hi, shape, dtype)
    if kind == "tuple":
        return TupleSpace(
            tuple(random_space(rng, depth + 1) for _ in range(rng.uniform_int(1, 3)))
        )
    names = [f"k{i}" for i in range(rng.uniform_int(1, 3))]
    return DictSpace({name: random_space(rng, depth + 1) for name in names})


def random_container(space, rng: RngStream):
    """Random container conforming to `space` (independent of spaces.sample)."""
    if isinstance(space, Discrete):
        return DiscreteValue(rng.uniform_int(0, space.n - 1))
    if isinstance(space, Box):
        n = flat_len(space.shape)
        if space.dtype in ("u32", "i32"):
            data = [rng.uniform_int(math.ceil(space.low), math.floor(space.high)) for _ in range(n)]
        else:
            data = [rng.uniform_f64(space.low, space.high) for _ in range(n)]
        return BoxValue(shape=space.shape, dtype=space.dtype, data=tuple(data))
    if isinstance(space, TupleSpace):
        return TupleValue(tuple(random_container(c, rng) for c in space.children))
    return DictValue({name: random_container(c, rng) for name, c in space.entries})


@contextmanager
def running_server(settings: EnvSettings, port: int = 0):
    """Serve one session on an ephemeral port in a daemon thread."""
    server = EnvServer(lambda args: make_driver(apply_init_args(settings, args)), port=port)
    bound = server.bind()
    result: dict = {}

    def run():
        result["clean"] = server.serve()

    thread = threading.Thread(target=run, daemon=True)
    thread.start()
    try:
        yield bound, result
    finally:
        thread.join(timeout=10)
