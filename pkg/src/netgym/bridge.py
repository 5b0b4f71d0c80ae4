"""Environment-side driver: episode lifecycle, step rendezvous, TCP serving.

A scenario implements the seven-hook environment interface plus a `start`
method that schedules its simulation events.  The driver owns the blocking
rendezvous: virtual time only advances inside `step`, between receiving an
action and gathering the next result, so the simulation clock is frozen for
the whole agent round-trip.  The TCP server wraps one driver per session and
enforces the init -> (reset -> step*)* -> close request grammar.
"""

from __future__ import annotations

import abc
import logging
import socket
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from . import protocol
from .protocol import (
    CloseReq,
    CloseResp,
    ErrorResp,
    InitReq,
    InitResp,
    Message,
    ResetReq,
    ResetResp,
    StepReq,
    StepResp,
)
from .sim import Engine
from .spaces import Container, Space, conforms

log = logging.getLogger("netgym.bridge")


class LifecycleError(RuntimeError):
    """Operation out of order for the current episode/session state."""


class EpisodeOverError(LifecycleError):
    """Step requested after the episode already finished."""


class ActionRejectedError(RuntimeError):
    """The scenario refused the action; the episode continues unchanged."""


class HookError(RuntimeError):
    """A scenario hook raised or broke its contract; the episode is aborted."""


@dataclass(frozen=True)
class TimeBased:
    interval_ticks: int

    def __post_init__(self):
        if self.interval_ticks < 1:
            raise ValueError("step interval must be >= 1 tick")


@dataclass(frozen=True)
class EventBased:
    pass


StepTrigger = Union[TimeBased, EventBased]


@dataclass(frozen=True)
class StepResult:
    observation: Container
    reward: float
    done: bool
    done_reason: str
    info: str

    def __post_init__(self):
        object.__setattr__(self, "reward", float(np.float32(self.reward)))


class EnvHooks(abc.ABC):
    """The environment interface every scenario implements.

    The four state getters are always called in a fixed order at each step
    gather: observation, reward, game-over, extra info.  Getters may be
    stateful (e.g. a reward that resets its accumulator), so the order is
    part of the contract.
    """

    #: how steps are triggered for this scenario
    trigger: StepTrigger

    @abc.abstractmethod
    def get_observation_space(self) -> Space: ...

    @abc.abstractmethod
    def get_action_space(self) -> Space: ...

    @abc.abstractmethod
    def get_observation(self) -> Container: ...

    @abc.abstractmethod
    def get_reward(self) -> float: ...

    @abc.abstractmethod
    def get_game_over(self) -> bool: ...

    @abc.abstractmethod
    def get_extra_info(self) -> str: ...

    @abc.abstractmethod
    def execute_actions(self, action: Container) -> bool: ...

    def start(self, engine: Engine, notify_step: Callable[[], None]) -> None:
        """Schedule the scenario's simulation events on a fresh engine.

        Event-based scenarios call `notify_step()` from inside an event to
        pause the simulation at a step boundary; time-based scenarios ignore
        it.
        """


class EpisodeDriver:
    """Runs episodes of one scenario with reproducible per-episode seeding.

    Episode seeds advance as base_seed + episode_index, giving reproducible
    yet varied episodes across resets.
    """

    def __init__(self, factory: Callable[[int], EnvHooks], sim_time_ticks: int, base_seed: int):
        if sim_time_ticks < 1:
            raise ValueError("simulation length must be >= 1 tick")
        self._factory = factory
        self._sim_time = sim_time_ticks
        self._base_seed = base_seed
        self._episode_index = -1
        self._engine: Optional[Engine] = None
        self._env: Optional[EnvHooks] = None
        self._done = True
        probe = factory(base_seed)
        self._obs_space = probe.get_observation_space()
        self._act_space = probe.get_action_space()
        self._trigger = probe.trigger

    @property
    def observation_space(self) -> Space:
        return self._obs_space

    @property
    def action_space(self) -> Space:
        return self._act_space

    @property
    def episode_index(self) -> int:
        return self._episode_index

    @property
    def episode_done(self) -> bool:
        return self._done

    @property
    def engine(self) -> Optional[Engine]:
        return self._engine

    def reset(self) -> Container:
        self._episode_index += 1
        seed = (self._base_seed + self._episode_index) & (2**64 - 1)
        self._engine = Engine()
        try:
            self._env = self._factory(seed)
            self._env.start(self._engine, self._notify_step)
            obs = self._env.get_observation()
        except Exception as e:
            self._done = True
            raise HookError(f"scenario failed to start: {e}") from e
        if not conforms(obs, self._obs_space):
            self._done = True
            raise HookError("initial observation does not conform to the observation space")
        self._done = False
        return obs

    def _notify_step(self) -> None:
        if self._engine is None or self._done:
            raise LifecycleError("notify_step called with no active episode")
        self._engine.request_break()

    def step(self, action: Container) -> StepResult:
        if self._env is None or self._engine is None:
            raise LifecycleError("no episode started; reset first")
        if self._done:
            raise EpisodeOverError("episode is over; reset to continue")
        try:
            accepted = self._env.execute_actions(action)
        except Exception as e:
            self._done = True
            raise HookError(f"execute_actions raised: {e}") from e
        if not accepted:
            raise ActionRejectedError("scenario rejected the action")
        engine = self._engine
        if isinstance(self._trigger, TimeBased):
            target = min(engine.now + self._trigger.interval_ticks, self._sim_time)
            engine.run_until(target)
        else:
            engine.run_until(self._sim_time, breakable=True)
        result = self._gather()
        if result.done:
            self._done = True
        return result

    def _gather(self) -> StepResult:
        assert self._env is not None and self._engine is not None
        clock_before = self._engine.now
        try:
            obs = self._env.get_observation()
            reward = self._env.get_reward()
            game_over = self._env.get_game_over()
            info = self._env.get_extra_info()
        except Exception as e:
            self._done = True
            raise HookError(f"state gather raised: {e}") from e
        if not conforms(obs, self._obs_space):
            self._done = True
            raise HookError("observation does not conform to the observation space")
        if self._engine.now != clock_before:
            self._done = True
            raise HookError("simulation clock moved during gather")
        if game_over:
            done, reason = True, "GameOver"
        elif self._engine.now >= self._sim_time:
            done, reason = True, "SimulationEnd"
        else:
            done, reason = False, ""
        return StepResult(obs, float(reward), done, reason, str(info))


class LocalEnv:
    """In-process environment handle with the same surface as the TCP client."""

    def __init__(self, driver: EpisodeDriver):
        self._driver = driver
        self.observation_space = driver.observation_space
        self.action_space = driver.action_space
        self._started = False

    def reset(self) -> Container:
        self._started = True
        return self._driver.reset()

    def step(self, action: Container) -> StepResult:
        if not self._started:
            raise LifecycleError("reset the environment before stepping")
        if not conforms(action, self.action_space):
            raise ActionRejectedError("action does not conform to the action space")
        return self._driver.step(action)

    def close(self) -> None:
        pass


DriverBuilder = Callable[[dict], EpisodeDriver]


class EnvServer:
    """One TCP session serving one environment.

    The driver is built when init_req arrives, so init args can still adjust
    scenario parameters.  Exactly one connection is served; parallelism comes
    from running multiple server processes.
    """

    def __init__(self, build_driver: DriverBuilder, host: str = "127.0.0.1", port: int = 5555):
        self._build_driver = build_driver
        self._host = host
        self._port = port
        self._listener: Optional[socket.socket] = None

    def bind(self) -> int:
        """Bind and listen; returns the actual port (useful with port 0)."""
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self._host, self._port))
        listener.listen(1)
        self._listener = listener
        self._port = listener.getsockname()[1]
        return self._port

    @property
    def port(self) -> int:
        return self._port

    def serve(self) -> bool:
        """Serve one session; True when it ended with a clean close exchange."""
        if self._listener is None:
            self.bind()
        assert self._listener is not None
        conn, peer = self._listener.accept()
        log.info("session from %s:%d", *peer)
        try:
            return self._session(conn)
        finally:
            conn.close()
            self._listener.close()
            self._listener = None

    # session states
    _AWAIT_INIT = "await_init"
    _READY = "ready"
    _EPISODE = "episode"
    _EPISODE_DONE = "episode_done"

    def _session(self, conn: socket.socket) -> bool:
        state = self._AWAIT_INIT
        driver: Optional[EpisodeDriver] = None

        def reply(m: Message) -> None:
            protocol.write_frame(conn, protocol.encode_payload(m))

        while True:
            try:
                payload = protocol.read_frame(conn)
            except protocol.SizeError as e:
                # The stream cannot be resynced once a length prefix lies.
                log.warning("oversized frame: %s", e)
                try:
                    reply(ErrorResp("size_error", str(e)))
                except OSError:
                    pass
                return False
            except (protocol.FramingError, OSError) as e:
                log.warning("transport failure: %s", e)
                return False
            if payload is None:
                log.warning("peer hung up without close_req")
                return False

            try:
                msg = protocol.decode_payload(payload)
            except protocol.ParseError as e:
                reply(ErrorResp("parse_error", str(e)))
                continue
            except protocol.ProtocolError as e:
                reply(ErrorResp("protocol_error", str(e)))
                continue

            if isinstance(msg, InitReq):
                if state != self._AWAIT_INIT:
                    reply(ErrorResp("bad_state", "session is already initialized"))
                    continue
                try:
                    driver = self._build_driver(msg.args)
                except Exception as e:
                    log.error("driver construction failed: %s", e)
                    reply(ErrorResp("init_error", str(e)))
                    continue
                reply(InitResp(driver.observation_space, driver.action_space))
                state = self._READY
            elif isinstance(msg, ResetReq):
                if driver is None:
                    reply(ErrorResp("bad_state", "init_req must come first"))
                    continue
                try:
                    obs = driver.reset()
                except HookError as e:
                    reply(ErrorResp("hook_error", str(e)))
                    state = self._READY
                    continue
                reply(ResetResp(obs))
                state = self._EPISODE
            elif isinstance(msg, StepReq):
                if state in (self._AWAIT_INIT, self._READY) or driver is None:
                    reply(ErrorResp("bad_state", "no active episode"))
                    continue
                if state == self._EPISODE_DONE:
                    reply(ErrorResp("episode_over", "episode finished; reset to continue"))
                    continue
                try:
                    result = driver.step(msg.action)
                except ActionRejectedError as e:
                    reply(ErrorResp("action_rejected", str(e)))
                    continue
                except HookError as e:
                    # Episode aborted; done is latched with a game-over cause.
                    reply(ErrorResp("hook_error", str(e)))
                    state = self._EPISODE_DONE
                    continue
                reply(
                    StepResp(
                        observation=result.observation,
                        reward=result.reward,
                        done=result.done,
                        done_reason=result.done_reason,
                        info=result.info,
                    )
                )
                if result.done:
                    state = self._EPISODE_DONE
            elif isinstance(msg, CloseReq):
                if state == self._AWAIT_INIT:
                    reply(ErrorResp("bad_state", "init_req must come first"))
                    continue
                reply(CloseResp())
                return True
            else:
                reply(ErrorResp("protocol_error", f"{type(msg).__name__} is not a request"))
