"""Reference agents and the episode runner.

Agents consume observation containers and emit action containers.  The
spectrum agents key on the one-hot occupancy observation; the mesh agents
emit per-node contention-window vectors.  Q-learning is tabular: the
interference scenario has exactly num_channels distinct observations, so a
table with one row per occupied-channel index is sufficient.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .mesh import graded_cw_vector
from .protocol import canon_number
from .sim import RngStream
from .spaces import Box, BoxValue, Container, Discrete, DiscreteValue, Space, sample

# Client-side RNG stream ids (per-component, under the agent seed).
POLICY_RNG_STREAM = 1
SEARCH_RNG_STREAM = 2


def occupied_index(obs: Container) -> int:
    """State key for the spectrum scenario: index of the busy channel."""
    if not isinstance(obs, BoxValue):
        raise TypeError("expected a box observation")
    data = obs.data
    return max(range(len(data)), key=lambda i: data[i])


class QTable:
    """Tabular action values with one-step Q-learning updates."""

    def __init__(self, n_actions: int, alpha: float = 0.1, gamma: float = 0.9):
        self.n_actions = n_actions
        self.alpha = alpha
        self.gamma = gamma
        self._values: dict[int, np.ndarray] = {}

    def values(self, state: int) -> np.ndarray:
        row = self._values.get(state)
        if row is None:
            row = np.zeros(self.n_actions, dtype=np.float64)
            self._values[state] = row
        return row

    def greedy(self, state: int) -> int:
        return int(np.argmax(self.values(state)))

    def states(self) -> list[int]:
        return sorted(self._values)

    def finite(self) -> bool:
        return all(np.isfinite(row).all() for row in self._values.values())


def q_update(table: QTable, s: int, a: int, r: float, s_next: int, done: bool) -> None:
    """One-step Q-learning: Q(s,a) += alpha * (r + gamma*maxQ(s')*(1-done) - Q(s,a))."""
    row = table.values(s)
    bootstrap = 0.0 if done else table.gamma * float(np.max(table.values(s_next)))
    row[a] += table.alpha * (r + bootstrap - row[a])


class Agent:
    """Base agent: act on an observation, optionally learn from transitions."""

    def begin_episode(self, episode_index: int) -> None:
        pass

    def act(self, obs: Container) -> Container:
        raise NotImplementedError

    def observe(self, obs: Container, action: Container, reward: float,
                next_obs: Container, done: bool) -> None:
        pass


class RandomAgent(Agent):
    """Uniform random actions over the action space."""

    def __init__(self, action_space: Space, seed: int = 0):
        self.action_space = action_space
        self.rng = RngStream(seed, POLICY_RNG_STREAM)

    def act(self, obs: Container) -> Container:
        return sample(self.action_space, self.rng)


class OracleAgent(Agent):
    """Closed-form optimal policy for the sweeping interferer.

    The channel the sweep will occupy next is one past the currently busy
    one; picking the channel one past *that* is always interference-free.
    """

    def __init__(self, action_space: Space):
        if not isinstance(action_space, Discrete):
            raise ValueError("the oracle agent needs a discrete channel action space")
        self.n = action_space.n

    def act(self, obs: Container) -> Container:
        return DiscreteValue((occupied_index(obs) + 2) % self.n)


class AdversaryAgent(Agent):
    """Worst-case policy: always pick the channel the interferer moves to."""

    def __init__(self, action_space: Space):
        if not isinstance(action_space, Discrete):
            raise ValueError("the adversary agent needs a discrete channel action space")
        self.n = action_space.n

    def act(self, obs: Container) -> Container:
        return DiscreteValue((occupied_index(obs) + 1) % self.n)


class QLearningAgent(Agent):
    """Tabular epsilon-greedy Q-learning over the occupied-channel state."""

    def __init__(
        self,
        action_space: Space,
        seed: int = 0,
        alpha: float = 0.1,
        gamma: float = 0.9,
        epsilon_start: float = 1.0,
        epsilon_decay: float = 0.99,
        epsilon_floor: float = 0.01,
    ):
        if not isinstance(action_space, Discrete):
            raise ValueError("q-learning here needs a discrete action space")
        self.table = QTable(action_space.n, alpha=alpha, gamma=gamma)
        self.rng = RngStream(seed, POLICY_RNG_STREAM)
        self.epsilon = epsilon_start
        self.epsilon_decay = epsilon_decay
        self.epsilon_floor = epsilon_floor
        self.exploring = True
        self._first_episode_seen = False

    def begin_episode(self, episode_index: int) -> None:
        if self._first_episode_seen:
            self.epsilon = max(self.epsilon * self.epsilon_decay, self.epsilon_floor)
        self._first_episode_seen = True

    def act(self, obs: Container) -> Container:
        state = occupied_index(obs)
        if self.exploring and self.rng.uniform_f64() < self.epsilon:
            return DiscreteValue(self.rng.uniform_int(0, self.table.n_actions - 1))
        return DiscreteValue(self.table.greedy(state))

    def observe(self, obs, action, reward, next_obs, done) -> None:
        if not self.exploring:
            return
        assert isinstance(action, DiscreteValue)
        q_update(
            self.table,
            occupied_index(obs),
            action.value,
            reward,
            occupied_index(next_obs),
            done,
        )

    def greedy_policy(self) -> dict[int, int]:
        return {s: self.table.greedy(s) for s in self.table.states()}


class GradedCwAgent(Agent):
    """Constant per-node CW assignment, smaller toward the destination."""

    def __init__(self, action_space: Space, vector=None):
        if not isinstance(action_space, Box) or len(action_space.shape) != 1:
            raise ValueError("the graded-cw agent needs a per-node box action space")
        num_nodes = action_space.shape[0]
        vec = list(vector) if vector is not None else graded_cw_vector(num_nodes)
        if len(vec) != num_nodes:
            raise ValueError(f"cw vector has {len(vec)} entries for {num_nodes} nodes")
        self._action = BoxValue.vector(vec, action_space.dtype)

    def act(self, obs: Container) -> Container:
        return self._action


class HillClimbCwAgent(Agent):
    """Episode-level local search over per-node CW vectors.

    Each episode plays one candidate vector as a constant action; the
    candidate replaces the incumbent when its episode reward is strictly
    better.  Neighbors perturb one sender's window up or down a rung.
    """

    RUNGS = (0, 1, 2, 3, 5, 7, 11, 15, 23, 31)

    def __init__(self, action_space: Space, seed: int = 0):
        if not isinstance(action_space, Box) or len(action_space.shape) != 1:
            raise ValueError("the hill-climb agent needs a per-node box action space")
        self.num_nodes = action_space.shape[0]
        self.dtype = action_space.dtype
        self.rng = RngStream(seed, SEARCH_RNG_STREAM)
        self.incumbent = [15] * (self.num_nodes - 1) + [0]
        self.best_reward: Optional[float] = None
        self.candidate = list(self.incumbent)
        self._episode_reward = 0.0

    def begin_episode(self, episode_index: int) -> None:
        if episode_index > 0:
            if self.best_reward is None or self._episode_reward > self.best_reward:
                self.best_reward = self._episode_reward
                self.incumbent = list(self.candidate)
            self.candidate = self._neighbor()
        self._episode_reward = 0.0

    def _neighbor(self) -> list[int]:
        vec = list(self.incumbent)
        node = self.rng.uniform_int(0, self.num_nodes - 2)
        rung = self.RUNGS.index(min(self.RUNGS, key=lambda r: abs(r - vec[node])))
        rung += 1 if self.rng.uniform_int(0, 1) else -1
        vec[node] = self.RUNGS[min(max(rung, 0), len(self.RUNGS) - 1)]
        return vec

    def act(self, obs: Container) -> Container:
        return BoxValue.vector(self.candidate, self.dtype)

    def observe(self, obs, action, reward, next_obs, done) -> None:
        self._episode_reward += reward


AGENT_NAMES = ("random", "oracle", "qlearn", "graded-cw", "hillclimb")


def make_agent(name: str, action_space: Space, seed: int = 0) -> Agent:
    if name == "random":
        return RandomAgent(action_space, seed)
    if name == "oracle":
        return OracleAgent(action_space)
    if name == "qlearn":
        return QLearningAgent(action_space, seed)
    if name == "graded-cw":
        return GradedCwAgent(action_space)
    if name == "hillclimb":
        return HillClimbCwAgent(action_space, seed)
    raise ValueError(f"unknown agent {name!r}; choose from {', '.join(AGENT_NAMES)}")


@dataclass(frozen=True)
class EpisodeMetrics:
    episode: int
    steps: int
    total_reward: float
    collisions: int


CSV_HEADER = ("episode", "steps", "total_reward", "collisions")


def metrics_to_csv(metrics: list[EpisodeMetrics]) -> str:
    """Canonical CSV: header plus one row per episode, numbers in shortest form."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for m in metrics:
        writer.writerow([m.episode, m.steps, canon_number(m.total_reward), m.collisions])
    return out.getvalue()


def run_episodes(
    env,
    agent: Agent,
    n_episodes: int,
    max_steps: int = 1_000_000,
    csv_out=None,
) -> list[EpisodeMetrics]:
    """Run the standard step loop for n episodes, collecting per-episode metrics.

    `collisions` counts negatively-rewarded steps.  When `csv_out` (a file
    object) is given, rows stream out as episodes finish, so a transport
    failure still leaves the completed episodes on disk; the failure is then
    re-raised.
    """
    writer = None
    if csv_out is not None:
        writer = csv.writer(csv_out, lineterminator="\n")
        writer.writerow(CSV_HEADER)
    metrics: list[EpisodeMetrics] = []
    for episode in range(n_episodes):
        agent.begin_episode(episode)
        obs = env.reset()
        total = 0.0
        steps = 0
        collisions = 0
        while steps < max_steps:
            action = agent.act(obs)
            result = env.step(action)
            agent.observe(obs, action, result.reward, result.observation, result.done)
            total += result.reward
            steps += 1
            if result.reward < 0:
                collisions += 1
            obs = result.observation
            if result.done:
                break
        row = EpisodeMetrics(episode, steps, total, collisions)
        metrics.append(row)
        if writer is not None:
            writer.writerow([row.episode, row.steps, canon_number(row.total_reward), row.collisions])
            csv_out.flush()
    return metrics
