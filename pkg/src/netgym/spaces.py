"""Observation/action space definitions and the typed containers that fill them.

Four space kinds are supported: a discrete set {0..n-1}, a bounded box of
uniformly-typed numbers, and tuple/dict composites of simpler spaces.  Values
travel as immutable containers whose structure mirrors exactly one space, and
`conforms` is the predicate pairing the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

import numpy as np

from .sim import RngStream

DTYPES = ("u32", "i32", "f32", "f64")
_INT_DOMAIN = {"u32": (0, 2**32 - 1), "i32": (-(2**31), 2**31 - 1)}
MAX_NESTING = 16
_MAX_ELEMENTS = 2**63 - 1


class SpaceError(ValueError):
    """Malformed space or container definition."""


def flat_len(shape: tuple[int, ...]) -> int:
    """Number of elements of a row-major box with the given shape."""
    if len(shape) == 0:
        raise SpaceError("shape must be non-empty")
    total = 1
    for dim in shape:
        if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
            raise SpaceError(f"shape dimensions must be positive integers, got {dim!r}")
        total *= dim
        if total > _MAX_ELEMENTS:
            raise OverflowError(f"shape {shape} exceeds element range")
    return total


def _as_shape(shape) -> tuple[int, ...]:
    t = tuple(shape)
    flat_len(t)  # validates
    return t


@dataclass(frozen=True)
class Discrete:
    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 1:
            raise SpaceError(f"Discrete needs n >= 1, got {self.n!r}")


@dataclass(frozen=True)
class Box:
    low: float
    high: float
    shape: tuple[int, ...]
    dtype: str

    def __post_init__(self):
        object.__setattr__(self, "shape", _as_shape(self.shape))
        if self.dtype not in DTYPES:
            raise SpaceError(f"unknown dtype {self.dtype!r}")
        low, high = self.low, self.high
        if isinstance(low, bool) or isinstance(high, bool):
            raise SpaceError("Box bounds must be numbers")
        if not (math.isfinite(low) and math.isfinite(high)):
            raise SpaceError("Box bounds must be finite")
        if self.dtype == "f32":
            # Snap bounds to exact float32 values so samples and conformance
            # agree with what a 32-bit peer sees.
            low = _snap_f32(low)
            high = _snap_f32(high)
            object.__setattr__(self, "low", low)
            object.__setattr__(self, "high", high)
        if low > high:
            raise SpaceError(f"Box needs low <= high, got [{low}, {high}]")
        if self.dtype in _INT_DOMAIN:
            dlow, dhigh = _INT_DOMAIN[self.dtype]
            if low < dlow or high > dhigh:
                raise SpaceError(
                    f"Box bounds [{low}, {high}] outside {self.dtype} domain"
                )
            if math.ceil(low) > math.floor(high):
                raise SpaceError(
                    f"Box [{low}, {high}] contains no {self.dtype} value"
                )


@dataclass(frozen=True)
class TupleSpace:
    children: tuple["Space", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise SpaceError("Tuple space needs at least one child")
        _check_depth(self)


@dataclass(frozen=True)
class DictSpace:
    entries: tuple[tuple[str, "Space"], ...]

    def __init__(self, entries: Union[Mapping[str, "Space"], Iterable[tuple[str, "Space"]]]):
        pairs = list(entries.items()) if isinstance(entries, Mapping) else list(entries)
        if not pairs:
            raise SpaceError("Dict space needs at least one entry")
        names = [name for name, _ in pairs]
        if len(set(names)) != len(names):
            raise SpaceError("Dict space entry names must be unique")
        # Entry order is canonical (sorted by name) regardless of insertion order.
        object.__setattr__(self, "entries", tuple(sorted(pairs, key=lambda kv: kv[0])))
        _check_depth(self)

    def as_dict(self) -> dict[str, "Space"]:
        return dict(self.entries)


Space = Union[Discrete, Box, TupleSpace, DictSpace]


def _space_depth(s: Space) -> int:
    if isinstance(s, TupleSpace):
        return 1 + max(_space_depth(c) for c in s.children)
    if isinstance(s, DictSpace):
        return 1 + max(_space_depth(c) for _, c in s.entries)
    return 1


def _check_depth(s: Space) -> None:
    if _space_depth(s) > MAX_NESTING:
        raise SpaceError(f"space nesting exceeds {MAX_NESTING} levels")


def _snap_f32(x: float) -> float:
    v = float(np.float32(x))
    if not math.isfinite(v):
        raise SpaceError(f"{x!r} overflows float32")
    return v


def _coerce_element(v, dtype: str):
    if isinstance(v, bool):
        raise SpaceError("box elements must be numbers, not booleans")
    if dtype in _INT_DOMAIN:
        if isinstance(v, float):
            if not v.is_integer():
                raise SpaceError(f"non-integral value {v!r} for {dtype} box")
            v = int(v)
        if not isinstance(v, int):
            raise SpaceError(f"bad {dtype} element {v!r}")
        dlow, dhigh = _INT_DOMAIN[dtype]
        if v < dlow or v > dhigh:
            raise SpaceError(f"value {v} outside {dtype} domain")
        return v
    v = float(v)
    if not math.isfinite(v):
        raise SpaceError("box elements must be finite")
    if dtype == "f32":
        v = _snap_f32(v)
    return v


@dataclass(frozen=True)
class DiscreteValue:
    value: int

    def __post_init__(self):
        if not isinstance(self.value, int) or isinstance(self.value, bool):
            raise SpaceError(f"discrete value must be an integer, got {self.value!r}")


@dataclass(frozen=True)
class BoxValue:
    shape: tuple[int, ...]
    dtype: str
    data: tuple

    def __post_init__(self):
        object.__setattr__(self, "shape", _as_shape(self.shape))
        if self.dtype not in DTYPES:
            raise SpaceError(f"unknown dtype {self.dtype!r}")
        data = tuple(_coerce_element(v, self.dtype) for v in self.data)
        if len(data) != flat_len(self.shape):
            raise SpaceError(
                f"box data has {len(data)} elements, shape {self.shape} needs "
                f"{flat_len(self.shape)}"
            )
        object.__setattr__(self, "data", data)

    @classmethod
    def vector(cls, data, dtype: str) -> "BoxValue":
        data = tuple(data)
        return cls(shape=(len(data),), dtype=dtype, data=data)

    def as_array(self) -> np.ndarray:
        np_dtype = {"u32": np.uint32, "i32": np.int32, "f32": np.float32, "f64": np.float64}
        return np.array(self.data, dtype=np_dtype[self.dtype]).reshape(self.shape)


@dataclass(frozen=True)
class TupleValue:
    items: tuple["Container", ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise SpaceError("tuple container needs at least one item")


@dataclass(frozen=True)
class DictValue:
    entries: tuple[tuple[str, "Container"], ...]

    def __init__(self, entries):
        pairs = list(entries.items()) if isinstance(entries, Mapping) else list(entries)
        if not pairs:
            raise SpaceError("dict container needs at least one entry")
        names = [name for name, _ in pairs]
        if len(set(names)) != len(names):
            raise SpaceError("dict container entry names must be unique")
        object.__setattr__(self, "entries", tuple(sorted(pairs, key=lambda kv: kv[0])))

    def as_dict(self) -> dict[str, "Container"]:
        return dict(self.entries)


Container = Union[DiscreteValue, BoxValue, TupleValue, DictValue]


def conforms(c: Container, s: Space) -> bool:
    """True iff container `c` is a well-formed value of space `s`."""
    if isinstance(s, Discrete):
        return isinstance(c, DiscreteValue) and 0 <= c.value < s.n
    if isinstance(s, Box):
        return (
            isinstance(c, BoxValue)
            and c.shape == s.shape
            and c.dtype == s.dtype
            and all(s.low <= v <= s.high for v in c.data)
        )
    if isinstance(s, TupleSpace):
        return (
            isinstance(c, TupleValue)
            and len(c.items) == len(s.children)
            and all(conforms(ci, si) for ci, si in zip(c.items, s.children))
        )
    if isinstance(s, DictSpace):
        if not isinstance(c, DictValue):
            return False
        if [n for n, _ in c.entries] != [n for n, _ in s.entries]:
            return False
        return all(conforms(cv, sv) for (_, cv), (_, sv) in zip(c.entries, s.entries))
    raise TypeError(f"not a space: {s!r}")


def sample(s: Space, rng: RngStream) -> Container:
    """Draw a uniform random container conforming to `s`."""
    if isinstance(s, Discrete):
        return DiscreteValue(rng.uniform_int(0, s.n - 1))
    if isinstance(s, Box):
        n = flat_len(s.shape)
        if s.dtype in _INT_DOMAIN:
            lo, hi = math.ceil(s.low), math.floor(s.high)
            data = tuple(rng.uniform_int(lo, hi) for _ in range(n))
        else:
            data = tuple(rng.uniform_f64(s.low, s.high) for _ in range(n))
        return BoxValue(shape=s.shape, dtype=s.dtype, data=data)
    if isinstance(s, TupleSpace):
        return TupleValue(tuple(sample(c, rng) for c in s.children))
    if isinstance(s, DictSpace):
        return DictValue([(name, sample(child, rng)) for name, child in s.entries])
    raise TypeError(f"not a space: {s!r}")
