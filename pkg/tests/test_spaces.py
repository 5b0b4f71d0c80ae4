"""Space validation, conformance, and sampling tests."""

import pytest

from conftest import random_container, random_space
from netgym.sim import RngStream
from netgym.spaces import (
    Box,
    BoxValue,
    DictSpace,
    DictValue,
    Discrete,
    DiscreteValue,
    SpaceError,
    TupleSpace,
    TupleValue,
    conforms,
    flat_len,
    sample,
)


class TestFlatLen:
    def test_vector(self):
        assert flat_len((5,)) == 5

    def test_matrix(self):
        assert flat_len((2, 3)) == 6

    def test_singleton_dims(self):
        assert flat_len((1, 1, 1)) == 1

    def test_empty_shape_rejected(self):
        with pytest.raises(SpaceError):
            flat_len(())

    def test_overflow(self):
        with pytest.raises(OverflowError):
            flat_len((2**32, 2**32))


class TestValidation:
    def test_discrete_needs_positive_n(self):
        with pytest.raises(SpaceError):
            Discrete(0)

    def test_box_needs_low_le_high(self):
        with pytest.raises(SpaceError):
            Box(5, 4, (1,), "f64")

    def test_box_rejects_unknown_dtype(self):
        with pytest.raises(SpaceError):
            Box(0, 1, (1,), "u8")

    def test_box_u32_domain(self):
        with pytest.raises(SpaceError):
            Box(-1, 5, (1,), "u32")
        with pytest.raises(SpaceError):
            Box(0, 2**33, (1,), "u32")

    def test_empty_composites_rejected(self):
        with pytest.raises(SpaceError):
            TupleSpace(())
        with pytest.raises(SpaceError):
            DictSpace({})

    def test_nesting_depth_limit(self):
        s = Discrete(2)
        for _ in range(15):
            s = TupleSpace((s,))
        with pytest.raises(SpaceError):
            TupleSpace((s,))

    def test_box_value_length_must_match_shape(self):
        with pytest.raises(SpaceError):
            BoxValue(shape=(3,), dtype="u32", data=(1, 2))

    def test_box_value_dtype_domain(self):
        with pytest.raises(SpaceError):
            BoxValue(shape=(1,), dtype="u32", data=(-1,))
        with pytest.raises(SpaceError):
            BoxValue(shape=(1,), dtype="i32", data=(2.5,))


class TestConforms:
    def test_discrete_lower_bound(self):
        assert conforms(DiscreteValue(0), Discrete(4))

    def test_discrete_upper_bound_exclusive(self):
        assert conforms(DiscreteValue(3), Discrete(4))
        assert not conforms(DiscreteValue(4), Discrete(4))

    def test_queue_length_box(self):
        space = Box(0, 100, (5,), "u32")
        value = BoxValue(shape=(5,), dtype="u32", data=(0, 100, 3, 7, 50))
        assert conforms(value, space)

    def test_box_out_of_bounds(self):
        space = Box(0, 100, (5,), "u32")
        value = BoxValue(shape=(5,), dtype="u32", data=(101, 0, 0, 0, 0))
        assert not conforms(value, space)

    def test_mismatched_kind(self):
        assert not conforms(DiscreteValue(0), Box(0, 1, (1,), "u32"))

    def test_box_shape_and_dtype_must_match(self):
        v = BoxValue(shape=(2,), dtype="u32", data=(0, 1))
        assert not conforms(v, Box(0, 1, (2, 1), "u32"))
        assert not conforms(v, Box(0, 1, (2,), "i32"))

    def test_dict_keys_must_match(self):
        space = DictSpace({"a": Discrete(2), "b": Discrete(2)})
        assert not conforms(DictValue({"a": DiscreteValue(0)}), space)
        good = DictValue({"b": DiscreteValue(1), "a": DiscreteValue(0)})
        assert conforms(good, space)

    def test_tuple_arity(self):
        space = TupleSpace((Discrete(2), Discrete(2)))
        assert not conforms(TupleValue((DiscreteValue(0),)), space)


class TestSample:
    def test_singleton_discrete_always_zero(self):
        rng = RngStream(0, 0)
        assert all(sample(Discrete(1), rng).value == 0 for _ in range(100))

    def test_u32_box_monte_carlo_mean(self):
        # elements uniform over {0..100}: per-element mean 50 +/- 2 over 10^4 draws
        space = Box(0, 100, (5,), "u32")
        rng = RngStream(42, 0)
        sums = [0] * 5
        n = 10_000
        for _ in range(n):
            v = sample(space, rng)
            assert all(0 <= x <= 100 for x in v.data)
            for i, x in enumerate(v.data):
                sums[i] += x
        for s in sums:
            assert abs(s / n - 50.0) <= 2.0

    def test_dict_sample_structure(self):
        space = DictSpace({"a": Discrete(2), "b": Box(0, 1, (1,), "f32")})
        rng = RngStream(3, 1)
        v = sample(space, rng)
        assert isinstance(v, DictValue)
        assert [name for name, _ in v.entries] == ["a", "b"]
        assert conforms(v, space)

    def test_sample_conforms_property(self):
        # 1000 random space trees
        gen = RngStream(2024, 7)
        draw = RngStream(2024, 8)
        for _ in range(1000):
            space = random_space(gen)
            assert conforms(sample(space, draw), space)

    def test_random_container_helper_conforms(self):
        gen = RngStream(5, 5)
        draw = RngStream(5, 6)
        for _ in range(300):
            space = random_space(gen)
            assert conforms(random_container(space, draw), space)


def test_dict_insertion_order_is_canonicalized():
    a = DictSpace({"x": Discrete(2), "y": Discrete(3)})
    b = DictSpace({"y": Discrete(3), "x": Discrete(2)})
    assert a == b
    assert a.entries == (("x", Discrete(2)), ("y", Discrete(3)))


def test_f32_bounds_snap_to_float32():
    space = Box(0.0, 0.3, (1,), "f32")
    import numpy as np

    assert space.high == float(np.float32(0.3))
    rng = RngStream(9, 0)
    for _ in range(200):
        assert conforms(sample(space, rng), space)
