#!/usr/bin/env python3
"""Regenerate the checked-in golden wire transcript.

Records every frame (both directions, full bytes) of one complete
interference-pattern episode played by the closed-form oracle policy against
a server with pinned settings, then the close exchange.  The output is only
expected to change if the wire format or the scenario rules change; review
any diff carefully before committing it.

Usage: python scripts/gen_golden_transcript.py [output.jsonl]
"""

import json
import socket
import struct
import sys
import threading
from pathlib import Path

from netgym.bridge import EnvServer
from netgym.envs import EnvSettings, apply_init_args, make_driver
from netgym.protocol import (
    CloseReq,
    InitReq,
    ResetReq,
    StepReq,
    decode_payload,
    encode,
    read_frame,
)
from netgym.spaces import DiscreteValue

GOLDEN_SETTINGS = EnvSettings(env="interference-pattern", seed=7, sim_time_s=0.02)


def record_episode() -> list[tuple[str, bytes]]:
    server = EnvServer(
        lambda args: make_driver(apply_init_args(GOLDEN_SETTINGS, args)), port=0
    )
    port = server.bind()
    thread = threading.Thread(target=server.serve, daemon=True)
    thread.start()

    sock = socket.create_connection(("127.0.0.1", port), timeout=10)
    frames: list[tuple[str, bytes]] = []

    def send(msg):
        blob = encode(msg)
        frames.append(("c2s", blob))
        sock.sendall(blob)

    def recv():
        payload = read_frame(sock)
        assert payload is not None
        frames.append(("s2c", struct.pack(">I", len(payload)) + payload))
        return decode_payload(payload)

    send(InitReq())
    recv()
    send(ResetReq())
    obs = recv().observation
    while True:
        occupied = max(range(4), key=lambda i: obs.data[i])
        send(StepReq(DiscreteValue((occupied + 2) % 4)))
        resp = recv()
        obs = resp.observation
        if resp.done:
            break
    send(CloseReq())
    recv()
    sock.close()
    thread.join(timeout=10)
    return frames


def main() -> None:
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "tests/data/golden_radio_episode.jsonl")
    out.parent.mkdir(parents=True, exist_ok=True)
    frames = record_episode()
    with out.open("w") as fh:
        for direction, blob in frames:
            fh.write(json.dumps({"dir": direction, "hex": blob.hex()}) + "\n")
    print(f"wrote {len(frames)} frames to {out}")


if __name__ == "__main__":
    main()
