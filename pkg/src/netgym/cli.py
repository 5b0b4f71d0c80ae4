"""Command-line entry points: environment server, agent runner, benchmarks.

Failure conventions: flag errors exit 2, runtime failures print one
``ERROR: ...`` line to stderr and exit 1.  ``serve`` prints ``LISTENING
<port>`` on stdout before accepting, so spawning clients can wait for it
race-free.  All randomness flows from --seed flags; nothing reads the wall
clock.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .agents import AGENT_NAMES, make_agent, run_episodes
from .bridge import EnvServer
from .client import StartupError, make
from .envs import ENV_NAMES, EnvSettings, apply_init_args, make_driver
from .mesh import MeshConfig, MeshState, graded_cw_vector

UNIFORM_CW_SET = (3, 7, 15, 31)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"ERROR: {message}", file=sys.stderr)
        sys.exit(2)


def _setup_logging(level: str | None) -> None:
    name = (level or os.environ.get("NETGYM_LOG") or "warning").upper()
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, name, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _build_parser() -> _Parser:
    parser = _Parser(prog="netgym", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", parents=[], help="run an environment server for one session")
    serve.add_argument("--env", required=True, choices=ENV_NAMES)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=5555, help="0 picks an ephemeral port")
    serve.add_argument("--seed", type=int, default=42)
    serve.add_argument("--sim-time-s", type=float, default=10.0)
    serve.add_argument("--step-interval-ms", type=float, default=100.0)
    serve.add_argument("--num-nodes", type=int, default=5)
    serve.add_argument("--queue-capacity", type=int, default=100)
    serve.add_argument("--num-channels", type=int, default=4)
    serve.add_argument("--log-level", default=None)

    agent = sub.add_parser("agent", help="run an agent against a server")
    target = agent.add_mutually_exclusive_group(required=True)
    target.add_argument("--endpoint", help="tcp://host:port of a running server")
    target.add_argument("--spawn", help="server command to spawn, e.g. 'netgym serve --env ... --port 0'")
    agent.add_argument("--agent", required=True, choices=AGENT_NAMES)
    agent.add_argument("--episodes", type=int, default=10)
    agent.add_argument("--max-steps", type=int, default=1_000_000)
    agent.add_argument("--seed", type=int, default=0)
    agent.add_argument("--metrics-out", default="-", help="CSV path, or - for stdout")
    agent.add_argument("--log-level", default=None)

    bench = sub.add_parser("bench", help="paired benchmarks")
    bench_sub = bench.add_subparsers(dest="bench_command", required=True)
    cw = bench_sub.add_parser("cw-compare", help="graded vs uniform contention windows")
    cw.add_argument("--seeds", type=int, default=10)
    cw.add_argument("--base-seed", type=int, default=0)
    cw.add_argument("--slots", type=int, default=10_000)
    cw.add_argument("--num-nodes", type=int, default=5)
    cw.add_argument("--queue-capacity", type=int, default=100)
    cw.add_argument("--log-level", default=None)

    return parser


def _cmd_serve(args) -> int:
    settings = EnvSettings(
        env=args.env,
        seed=args.seed,
        sim_time_s=args.sim_time_s,
        step_interval_ms=args.step_interval_ms,
        num_nodes=args.num_nodes,
        queue_capacity=args.queue_capacity,
        num_channels=args.num_channels,
    )
    server = EnvServer(
        lambda init_args: make_driver(apply_init_args(settings, init_args)),
        host=args.host,
        port=args.port,
    )
    try:
        port = server.bind()
    except OSError as e:
        print(f"ERROR: cannot bind {args.host}:{args.port}: {e}", file=sys.stderr)
        return 1
    print(f"LISTENING {port}", flush=True)
    clean = server.serve()
    if not clean:
        print("ERROR: session ended without a clean close", file=sys.stderr)
        return 1
    return 0


def _cmd_agent(args) -> int:
    target = args.endpoint if args.endpoint else args.spawn
    try:
        env = make(target)
    except StartupError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return 1
    try:
        agent = make_agent(args.agent, env.action_space, seed=args.seed)
    except ValueError as e:
        env.close()
        print(f"ERROR: {e}", file=sys.stderr)
        return 1
    sink = sys.stdout if args.metrics_out == "-" else open(args.metrics_out, "w", newline="")
    try:
        run_episodes(env, agent, args.episodes, max_steps=args.max_steps, csv_out=sink)
    finally:
        if sink is not sys.stdout:
            sink.close()
        env.close()
    return 0


def _cmd_bench_cw(args) -> int:
    config = MeshConfig(num_nodes=args.num_nodes, queue_capacity=args.queue_capacity)
    graded = graded_cw_vector(args.num_nodes)

    def deliveries(cw_vector, seed: int) -> int:
        state = MeshState(config, seed)
        state.set_cw_vector(cw_vector)
        return state.run_slots(args.slots)

    uniform_labels = [f"uniform{u}" for u in UNIFORM_CW_SET]
    print("seed graded " + " ".join(uniform_labels) + " best_uniform graded_wins")
    wins = 0
    for seed in range(args.base_seed, args.base_seed + args.seeds):
        graded_count = deliveries(graded, seed)
        uniform_counts = [
            deliveries([u] * (args.num_nodes - 1) + [0], seed) for u in UNIFORM_CW_SET
        ]
        best = max(uniform_counts)
        won = graded_count > best
        wins += won
        cells = " ".join(str(c) for c in uniform_counts)
        print(f"{seed} {graded_count} {cells} {best} {int(won)}")
    print(f"GRADED_WINS {wins}/{args.seeds}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    _setup_logging(getattr(args, "log_level", None))
    if args.command == "serve":
        return _cmd_serve(args)
    if args.command == "agent":
        return _cmd_agent(args)
    if args.command == "bench":
        return _cmd_bench_cw(args)
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
