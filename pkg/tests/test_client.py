"""Remote environment handle tests: connect, spawn, lifecycle, validation."""

import socket
import sys

import pytest

from conftest import running_server
from netgym.bridge import ActionRejectedError, EpisodeOverError, LifecycleError
from netgym.client import RemoteEnv, StartupError, make
from netgym.envs import EnvSettings
from netgym.spaces import Box, Discrete, DiscreteValue

SERVE = [sys.executable, "-m", "netgym.cli", "serve"]


def radio_settings(**kw):
    defaults = dict(env="interference-pattern", seed=7, sim_time_s=0.02)
    defaults.update(kw)
    return EnvSettings(**defaults)


class TestMake:
    def test_connect_to_prestarted_server(self):
        with running_server(radio_settings()) as (port, _):
            env = make(f"tcp://127.0.0.1:{port}")
            assert env.action_space == Discrete(4)
            assert env.observation_space == Box(0, 1, (4,), "u32")
            env.close()

    def test_spawn_server_command(self):
        env = make(
            SERVE
            + ["--env", "interference-pattern", "--port", "0", "--seed", "7", "--sim-time-s", "0.02"]
        )
        assert env.action_space == Discrete(4)
        obs = env.reset()
        assert obs.data == (1, 0, 0, 0)
        env.close()

    def test_spawn_accepts_shell_string(self):
        cmd = " ".join(SERVE) + " --env interference-pattern --port 0 --seed 7 --sim-time-s 0.02"
        env = make(cmd)
        assert env.action_space == Discrete(4)
        env.close()

    def test_closed_port_fails_fast(self):
        # grab an ephemeral port and release it: nothing listens there
        probe = socket.socket()
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
        probe.close()
        with pytest.raises(StartupError):
            make(f"tcp://127.0.0.1:{port}", connect_timeout=2)

    def test_spawn_failure_captures_output(self):
        with pytest.raises(StartupError) as excinfo:
            make(SERVE + ["--env", "bogus"], connect_timeout=5)
        assert "exited" in str(excinfo.value)

    def test_bad_endpoint_string(self):
        with pytest.raises(StartupError):
            make("tcp://nope")

    def test_init_args_forwarded(self):
        with running_server(radio_settings()) as (port, _):
            env = make(f"tcp://127.0.0.1:{port}", args={"num_channels": "5"})
            assert env.action_space == Discrete(5)
            env.close()


class TestLifecycle:
    def test_step_before_reset(self):
        with running_server(radio_settings()) as (port, _):
            env = make(f"tcp://127.0.0.1:{port}")
            with pytest.raises(LifecycleError):
                env.step(DiscreteValue(0))
            env.close()

    def test_nonconforming_action_rejected_locally(self):
        with running_server(radio_settings()) as (port, _):
            env = make(f"tcp://127.0.0.1:{port}")
            env.reset()
            with pytest.raises(ActionRejectedError):
                env.step(DiscreteValue(7))
            # nothing was sent; the session still works
            r = env.step(DiscreteValue(2))
            assert r.reward in (-1.0, 1.0)
            env.close()

    def test_step_after_done_then_reset(self):
        with running_server(radio_settings()) as (port, _):
            env = make(f"tcp://127.0.0.1:{port}")
            env.reset()
            done = False
            while not done:
                done = env.step(DiscreteValue(2)).done
            with pytest.raises(EpisodeOverError):
                env.step(DiscreteValue(2))
            obs = env.reset()
            assert obs.data == (1, 0, 0, 0)
            r = env.step(DiscreteValue(2))
            assert not isinstance(r, Exception)
            env.close()

    def test_closed_env_refuses_use(self):
        with running_server(radio_settings()) as (port, _):
            env = make(f"tcp://127.0.0.1:{port}")
            env.close()
            with pytest.raises(LifecycleError):
                env.reset()

    def test_rewards_in_range(self):
        with running_server(radio_settings()) as (port, _):
            env = make(f"tcp://127.0.0.1:{port}")
            obs = env.reset()
            for _ in range(10):
                r = env.step(DiscreteValue(1))
                assert r.reward in (-1.0, 1.0)
                if r.done:
                    break
            env.close()
