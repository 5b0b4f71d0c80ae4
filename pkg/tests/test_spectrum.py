"""Sweeping-interferer spectrum model tests."""

import pytest

from netgym.spectrum import SpectrumConfig, check_collision, interferer_channel, sense


class TestInterfererChannel:
    def test_first_sweep_is_diagonal(self):
        assert [interferer_channel(t) for t in (1, 2, 3, 4)] == [1, 2, 3, 4]

    def test_pattern_repeats_at_slot_five(self):
        assert interferer_channel(5) == 1

    def test_slot_seven(self):
        assert interferer_channel(7) == 3

    def test_periodicity_property(self):
        for t in range(1, 200):
            assert interferer_channel(t) == interferer_channel(t + 4)

    def test_slots_start_at_one(self):
        with pytest.raises(ValueError):
            interferer_channel(0)


class TestSense:
    def test_slot_two(self):
        assert sense(2) == [0, 1, 0, 0]

    def test_single_interferer(self):
        for t in range(1, 100):
            assert sum(sense(t)) == 1

    def test_period_four(self):
        for t in range(1, 50):
            assert sense(t) == sense(t + 4)

    def test_occupied_index_matches_channel(self):
        for t in range(1, 40):
            occ = sense(t)
            assert occ[interferer_channel(t) - 1] == 1

    def test_other_channel_counts(self):
        assert sense(3, num_channels=6) == [0, 0, 1, 0, 0, 0]


class TestCheckCollision:
    def test_diagonal_collides(self):
        assert check_collision(1, 1)

    def test_off_diagonal_clear(self):
        assert not check_collision(2, 1)

    def test_channel_range_validated(self):
        with pytest.raises(ValueError):
            check_collision(0, 1)
        with pytest.raises(ValueError):
            check_collision(5, 1)

    def test_oracle_policy_never_collides(self):
        # closed-form replay: pick the channel two ahead of the current sweep
        collisions = 0
        for t in range(1, 1001):
            chosen = (interferer_channel(t) + 1) % 4 + 1
            collisions += check_collision(chosen, t + 1)
        assert collisions == 0


def test_config_validation():
    with pytest.raises(ValueError):
        SpectrumConfig(num_channels=1)
    with pytest.raises(ValueError):
        SpectrumConfig(slot_ticks=0)
