"""The two reference environments and their scenario parameter plumbing.

linear-mesh: five-node saturated chain; the agent retunes every node's
contention window each step interval and is rewarded with the packets that
reached the destination during that interval.

interference-pattern: four-channel spectrum with a periodic sweeping
interferer; once per slot the agent picks the channel for the next slot,
earning +1 for a clean slot and -1 for a collision, with the episode ending
early after more than three collisions in the last ten slots.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, replace

from .bridge import EnvHooks, EpisodeDriver, EventBased, TimeBased
from .mesh import MeshConfig, MeshState
from .spaces import Box, BoxValue, Container, Discrete, DiscreteValue, conforms
from .spectrum import SpectrumConfig, check_collision, interferer_channel, sense

log = logging.getLogger("netgym.envs")

TICKS_PER_MS = 1_000_000
TICKS_PER_S = 1_000_000_000

# Conventional 10-bit 802.11 contention-window ceiling; bounds the action box.
CW_MAX_LIMIT = 1023

# Game-over window for the spectrum scenario: more than three collisions
# within the last ten slots.
COLLISION_WINDOW = 10
COLLISION_LIMIT = 3


class LinearMeshEnv(EnvHooks):
    """Queue-length observations, per-node CW actions, deliveries as reward."""

    def __init__(self, config: MeshConfig, seed: int, step_interval_ticks: int):
        self.config = config
        self.state = MeshState(config, seed)
        self.trigger = TimeBased(step_interval_ticks)
        self._obs_space = Box(0, config.queue_capacity, (config.num_nodes,), "u32")
        self._act_space = Box(0, CW_MAX_LIMIT, (config.num_nodes,), "u32")
        self._delivered_snapshot = 0

    def start(self, engine, notify_step):
        slot_ticks = self.config.slot_ticks

        def slot():
            self.state.run_slots(1)
            engine.schedule(slot_ticks, slot)

        engine.schedule(slot_ticks, slot)

    def get_observation_space(self):
        return self._obs_space

    def get_action_space(self):
        return self._act_space

    def get_observation(self) -> Container:
        return BoxValue.vector(self.state.queue_lengths(), "u32")

    def get_reward(self) -> float:
        delivered = self.state.delivered
        delta = delivered - self._delivered_snapshot
        self._delivered_snapshot = delivered
        return float(delta)

    def get_game_over(self) -> bool:
        return False

    def get_extra_info(self) -> str:
        return f"delivered={self.state.delivered}"

    def execute_actions(self, action: Container) -> bool:
        if not conforms(action, self._act_space):
            return False
        assert isinstance(action, BoxValue)
        self.state.set_cw_vector(action.data)
        return True


class InterferencePatternEnv(EnvHooks):
    """Wideband occupancy observations, next-slot channel choice as action."""

    def __init__(self, config: SpectrumConfig, seed: int):
        self.config = config
        self.slot = 1
        self.chosen_channel = 1
        self.trigger = EventBased()
        self._obs_space = Box(0, 1, (config.num_channels,), "u32")
        self._act_space = Discrete(config.num_channels)
        self._reward = 0.0
        self._window: deque[bool] = deque(maxlen=COLLISION_WINDOW)
        self.collisions_total = 0
        del seed  # the interferer sweep is deterministic

    def start(self, engine, notify_step):
        slot_ticks = self.config.slot_ticks

        def slot_boundary():
            self.slot += 1
            hit = check_collision(self.chosen_channel, self.slot, self.config.num_channels)
            self._window.append(hit)
            self.collisions_total += int(hit)
            self._reward = -1.0 if hit else 1.0
            engine.schedule(slot_ticks, slot_boundary)
            notify_step()

        engine.schedule(slot_ticks, slot_boundary)

    def get_observation_space(self):
        return self._obs_space

    def get_action_space(self):
        return self._act_space

    def get_observation(self) -> Container:
        return BoxValue.vector(sense(self.slot, self.config.num_channels), "u32")

    def get_reward(self) -> float:
        return self._reward

    def get_game_over(self) -> bool:
        return sum(self._window) > COLLISION_LIMIT

    def get_extra_info(self) -> str:
        return f"slot={self.slot}"

    def execute_actions(self, action: Container) -> bool:
        if not conforms(action, self._act_space):
            return False
        assert isinstance(action, DiscreteValue)
        self.chosen_channel = action.value + 1
        return True

    def next_interferer_channel(self) -> int:
        return interferer_channel(self.slot + 1, self.config.num_channels)


ENV_NAMES = ("linear-mesh", "interference-pattern")


@dataclass(frozen=True)
class EnvSettings:
    """Scenario parameters, mergeable from CLI flags and init args."""

    env: str
    seed: int = 42
    sim_time_s: float = 10.0
    step_interval_ms: float = 100.0
    num_nodes: int = 5
    queue_capacity: int = 100
    num_channels: int = 4

    def __post_init__(self):
        if self.env not in ENV_NAMES:
            raise ValueError(f"unknown env {self.env!r}; choose from {', '.join(ENV_NAMES)}")
        if self.sim_time_s <= 0 or self.step_interval_ms <= 0:
            raise ValueError("durations must be positive")
        if self.num_nodes < 2 or self.queue_capacity < 1 or self.num_channels < 2:
            raise ValueError("bad scenario sizes")

    @property
    def sim_time_ticks(self) -> int:
        return int(round(self.sim_time_s * TICKS_PER_S))

    @property
    def step_interval_ticks(self) -> int:
        return int(round(self.step_interval_ms * TICKS_PER_MS))


_ARG_PARSERS = {
    "seed": int,
    "sim_time_s": float,
    "step_interval_ms": float,
    "num_nodes": int,
    "queue_capacity": int,
    "num_channels": int,
}


def apply_init_args(settings: EnvSettings, args: dict[str, str]) -> EnvSettings:
    """Overlay init-message args onto settings; unknown keys are logged and
    ignored, bad values raise ValueError."""
    updates = {}
    for key, raw in args.items():
        parser = _ARG_PARSERS.get(key)
        if parser is None:
            log.warning("ignoring unknown init arg %r", key)
            continue
        try:
            updates[key] = parser(raw)
        except ValueError as e:
            raise ValueError(f"bad value for init arg {key!r}: {raw!r}") from e
    return replace(settings, **updates) if updates else settings


def make_driver(settings: EnvSettings) -> EpisodeDriver:
    """Build the per-session episode driver for the named environment."""
    if settings.env == "linear-mesh":
        config = MeshConfig(num_nodes=settings.num_nodes, queue_capacity=settings.queue_capacity)
        interval = settings.step_interval_ticks

        def factory(seed: int) -> EnvHooks:
            return LinearMeshEnv(config, seed, interval)

    else:
        config = SpectrumConfig(num_channels=settings.num_channels)

        def factory(seed: int) -> EnvHooks:
            return InterferencePatternEnv(config, seed)

    return EpisodeDriver(factory, settings.sim_time_ticks, settings.seed)
