"""Acceptance suite: one test per acceptance criterion, at stated tolerances.

Each test prints a single [PASS]/[FAIL] line (visible with -s or on failure)
and enforces the criterion's stated runtime budget.
"""

import json
import socket
import struct
import subprocess
import sys
import time
from pathlib import Path

from conftest import random_container, random_space, running_server
from netgym.agents import (
    AdversaryAgent,
    OracleAgent,
    QLearningAgent,
    RandomAgent,
    run_episodes,
)
from netgym.bridge import LocalEnv
from netgym.envs import EnvSettings, make_driver
from netgym.mesh import MeshConfig, MeshState, graded_cw_vector
from netgym.protocol import (
    ErrorResp,
    InitResp,
    ResetResp,
    StepReq,
    decode,
    decode_payload,
    encode,
    read_frame,
)
from netgym.sim import RngStream
from netgym.spaces import DiscreteValue, conforms
from netgym.spectrum import sense

GOLDEN_PATH = Path(__file__).parent / "data" / "golden_radio_episode.jsonl"
GOLDEN_SETTINGS = EnvSettings(env="interference-pattern", seed=7, sim_time_s=0.02)


def report(name: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f"  ({detail})"
    print(line)
    assert ok, line


def radio_local(seed: int, sim_time_s: float = 1.0) -> LocalEnv:
    return LocalEnv(
        make_driver(EnvSettings(env="interference-pattern", seed=seed, sim_time_s=sim_time_s))
    )


def test_interference_pattern_fidelity():
    # sense(t) for t=1..9: single occupied channel at ((t-1) mod 4)+1
    start = time.monotonic()
    expected = [
        [1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1],
        [1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1],
        [1, 0, 0, 0],
    ]
    got = [sense(t) for t in range(1, 10)]
    elapsed = time.monotonic() - start
    report(
        "interference pattern fidelity (slots 1..9, exact)",
        got == expected and elapsed < 1.0,
        f"{elapsed:.3f}s",
    )


def test_oracle_policy_optimality():
    start = time.monotonic()
    ok = True
    for episode_seed in (1, 2):
        env = radio_local(seed=episode_seed, sim_time_s=1.0)  # 10^3 slots
        metrics = run_episodes(env, OracleAgent(env.action_space), n_episodes=2)
        for m in metrics:
            ok = ok and m.total_reward == m.steps == 1000 and m.collisions == 0
    # explicit termination cause: simulation end, never game-over
    env = radio_local(seed=3, sim_time_s=1.0)
    obs = env.reset()
    agent = OracleAgent(env.action_space)
    while True:
        r = env.step(agent.act(obs))
        obs = r.observation
        if r.done:
            break
    ok = ok and r.done_reason == "SimulationEnd"
    elapsed = time.monotonic() - start
    report("oracle policy optimality (reward == steps, zero collisions)", ok and elapsed < 1.0,
           f"{elapsed:.3f}s")


def test_random_policy_baseline():
    # analytic expectation 3/4 - 1/4 = 0.5; tolerance 0.02 over 10^5 slots
    start = time.monotonic()
    env = radio_local(seed=11, sim_time_s=1.0)
    agent = RandomAgent(env.action_space, seed=11)
    steps = 0
    total = 0.0
    while steps < 100_000:
        for m in run_episodes(env, agent, n_episodes=200, max_steps=1000):
            steps += m.steps
            total += m.total_reward
    mean = total / steps
    elapsed = time.monotonic() - start
    report(
        "random-policy baseline (mean per-slot reward 0.5 +/- 0.02 over 1e5 slots)",
        abs(mean - 0.5) <= 0.02 and elapsed < 5.0,
        f"mean={mean:.4f} over {steps} slots, {elapsed:.2f}s",
    )


def test_q_learning_convergence():
    # 0 collisions over a greedy 100-slot evaluation within <=500 training
    # episodes on 5/5 seeds; greedy action dodges the interferer in every state
    start = time.monotonic()
    episodes_needed = []
    all_ok = True
    for seed in range(5):
        env = radio_local(seed=seed, sim_time_s=0.2)
        agent = QLearningAgent(env.action_space, seed=seed)
        converged = None
        for episode in range(500):
            run_episodes(env, agent, n_episodes=1, max_steps=200)
            agent.exploring = False
            probe = run_episodes(env, agent, n_episodes=1, max_steps=100)[0]
            agent.exploring = True
            if probe.steps == 100 and probe.collisions == 0:
                converged = episode + 1
                break
        policy_ok = converged is not None and all(
            agent.table.greedy(s) != (s + 1) % 4 for s in range(4)
        )
        all_ok = all_ok and policy_ok
        episodes_needed.append(converged)
    elapsed = time.monotonic() - start
    report(
        "q-learning convergence (5/5 seeds, <=500 episodes, greedy policy optimal)",
        all_ok and elapsed < 60.0,
        f"episodes to converge: {episodes_needed}, {elapsed:.2f}s",
    )


def test_game_over_rule():
    start = time.monotonic()
    # adversarial always-collide policy: done on the 4th scored slot
    env = radio_local(seed=1, sim_time_s=10.0)
    obs = env.reset()
    adversary = AdversaryAgent(env.action_space)
    steps = 0
    while True:
        r = env.step(adversary.act(obs))
        steps += 1
        obs = r.observation
        if r.done:
            break
    adversary_ok = steps == 4 and r.done_reason == "GameOver"

    # any fixed channel collides at most 3 times per 10-slot window: never done
    fixed_ok = True
    for channel in range(4):
        env = radio_local(seed=1, sim_time_s=10.0)  # 10^4 slots
        env.reset()
        n = 0
        while True:
            r = env.step(DiscreteValue(channel))
            n += 1
            if r.done:
                break
        fixed_ok = fixed_ok and n == 10_000 and r.done_reason == "SimulationEnd"
    elapsed = time.monotonic() - start
    report(
        "game-over rule (adversary done at slot 4; fixed channel never)",
        adversary_ok and fixed_ok and elapsed < 5.0,
        f"{elapsed:.2f}s",
    )


def test_random_access_ordering():
    # graded CW (smaller toward destination) vs best uniform in {3,7,15,31}
    start = time.monotonic()
    config = MeshConfig()
    graded = graded_cw_vector(5)
    wins = 0
    margins = []
    for seed in range(10):
        g = MeshState(config, seed)
        g.set_cw_vector(graded)
        graded_count = g.run_slots(10_000)
        best = 0
        for u in (3, 7, 15, 31):
            m = MeshState(config, seed)
            m.set_cw_vector([u] * 4 + [0])
            best = max(best, m.run_slots(10_000))
        wins += graded_count > best
        margins.append(graded_count - best)
    elapsed = time.monotonic() - start
    report(
        "random access ordering (graded beats best uniform on >=9/10 seeds)",
        wins >= 9 and elapsed < 60.0,
        f"wins={wins}/10, margins={margins}, {elapsed:.2f}s",
    )


def _replay_golden() -> bool:
    entries = [json.loads(line) for line in GOLDEN_PATH.read_text().splitlines()]
    with running_server(GOLDEN_SETTINGS) as (port, result):
        sock = socket.create_connection(("127.0.0.1", port), timeout=10)
        ok = True
        for entry in entries:
            blob = bytes.fromhex(entry["hex"])
            if entry["dir"] == "c2s":
                sock.sendall(blob)
            else:
                payload = read_frame(sock)
                got = struct.pack(">I", len(payload)) + payload
                if got != blob:
                    ok = False
                    break
        sock.close()
    return ok and result.get("clean") is True


def _fuzz_server(n_frames: int) -> tuple[bool, int]:
    """Mutated frames pre-init: every reply must be a classified error."""
    rng = RngStream(20240816, 0)
    base = encode(StepReq(DiscreteValue(1)))[4:]
    classified = 0
    with running_server(GOLDEN_SETTINGS) as (port, _):
        sock = socket.create_connection(("127.0.0.1", port), timeout=10)
        ok = True
        for _ in range(n_frames):
            payload = bytearray(base)
            for _ in range(rng.uniform_int(1, 4)):
                payload[rng.uniform_int(0, len(payload) - 1)] = rng.uniform_int(0, 255)
            sock.sendall(struct.pack(">I", len(payload)) + bytes(payload))
            reply = read_frame(sock)
            if reply is None:
                ok = False
                break
            msg = decode_payload(reply)
            if isinstance(msg, ErrorResp) and msg.code in (
                "parse_error", "protocol_error", "bad_state",
            ):
                classified += 1
            else:
                ok = False
                break
        if ok:
            # server is still healthy: run a full exchange and close
            from netgym.protocol import CloseReq, Connection, InitReq, ResetReq

            conn = Connection(sock)
            ok = isinstance(conn.roundtrip(InitReq()), InitResp)
            ok = ok and isinstance(conn.roundtrip(ResetReq()), ResetResp)
            ok = ok and not isinstance(conn.roundtrip(StepReq(DiscreteValue(0))), ErrorResp)
            conn.roundtrip(CloseReq())
        sock.close()
    return ok, classified


def test_protocol_conformance():
    start = time.monotonic()
    golden_ok = _replay_golden()
    fuzz_ok, classified = _fuzz_server(10_000)
    elapsed = time.monotonic() - start
    report(
        "protocol conformance (golden replay bit-exact; 1e4 fuzzed frames classified)",
        golden_ok and fuzz_ok and classified == 10_000 and elapsed < 30.0,
        f"classified={classified}, {elapsed:.2f}s",
    )


def test_cli_determinism(tmp_path):
    spawn = " ".join(
        [sys.executable, "-m", "netgym.cli", "serve", "--env", "interference-pattern",
         "--port", "0", "--seed", "7", "--sim-time-s", "0.05"]
    )

    def run(path):
        r = subprocess.run(
            [sys.executable, "-m", "netgym.cli", "agent", "--spawn", spawn,
             "--agent", "oracle", "--episodes", "5", "--seed", "3",
             "--metrics-out", str(path)],
            capture_output=True, text=True, timeout=120,
        )
        assert r.returncode == 0, r.stderr
        return Path(path).read_bytes()

    a = run(tmp_path / "a.csv")
    b = run(tmp_path / "b.csv")
    report("determinism (oracle agent CLI twice -> identical CSV)", a == b,
           f"{len(a)} bytes")


def test_space_container_roundtrip_suite():
    start = time.monotonic()
    gen = RngStream(555, 1)
    ok = True
    for _ in range(1000):
        space = random_space(gen)
        container = random_container(space, gen)
        m1 = InitResp(observation_space=space, action_space=space)
        m2 = StepReq(action=container)
        ok = ok and decode(encode(m1)) == m1
        ok = ok and encode(decode(encode(m1))) == encode(m1)
        back = decode(encode(m2))
        ok = ok and back == m2 and conforms(back.action, space)
        if not ok:
            break
    elapsed = time.monotonic() - start
    report(
        "space/container round-trip property suite (1e3 random trees)",
        ok and elapsed < 10.0,
        f"{elapsed:.2f}s",
    )
