/**
 * Environment handle: connect or spawn a server, then reset/step/close.
 *
 * The session is strict lockstep request/reply; one request may be in flight
 * at a time, and lifecycle misuse (step before reset, step after done) is
 * rejected locally before anything reaches the socket.
 */

import { spawn, type ChildProcess } from "node:child_process";
import * as net from "node:net";

import {
  conforms,
  decodePayload,
  encodeFrame,
  MAX_FRAME_BYTES,
  type ContainerTree,
  type Message,
  type SpaceTree,
} from "./protocol.js";

export class LifecycleError extends Error {}
export class TransportError extends Error {}
export class RemoteError extends Error {
  constructor(
    public readonly code: string,
    public readonly detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

export interface StepOutcome {
  observation: ContainerTree;
  reward: number;
  done: boolean;
  doneReason: string;
  info: string;
}

export type FrameRecorder = (direction: "c2s" | "s2c", frame: Buffer) => void;

/** Strict request/reply connection with frame reassembly. */
export class Connection {
  private buffer = Buffer.alloc(0);
  private waiter: { resolve: (b: Buffer) => void; reject: (e: Error) => void } | null = null;
  private pendingFrames: Buffer[] = [];
  private failure: Error | null = null;
  private awaitingReply = false;

  constructor(
    private readonly socket: net.Socket,
    private readonly recorder?: FrameRecorder,
  ) {
    socket.on("data", (chunk) => this.onData(chunk));
    socket.on("error", (err) => this.fail(new TransportError(String(err))));
    socket.on("close", () =>
      this.fail(new TransportError("peer closed the connection while a reply was pending")),
    );
  }

  private fail(err: Error) {
    if (this.failure === null) this.failure = err;
    if (this.waiter) {
      const w = this.waiter;
      this.waiter = null;
      w.reject(err);
    }
  }

  private onData(chunk: Buffer) {
    this.buffer = Buffer.concat([this.buffer, chunk]);
    while (this.buffer.length >= 4) {
      const length = this.buffer.readUInt32BE(0);
      if (length > MAX_FRAME_BYTES) {
        this.fail(new TransportError(`peer declared a ${length}-byte frame`));
        this.socket.destroy();
        return;
      }
      if (this.buffer.length < 4 + length) break;
      const frame = this.buffer.subarray(0, 4 + length);
      this.recorder?.("s2c", Buffer.from(frame));
      this.buffer = this.buffer.subarray(4 + length);
      const payload = frame.subarray(4);
      if (this.waiter) {
        const w = this.waiter;
        this.waiter = null;
        w.resolve(Buffer.from(payload));
      } else {
        this.pendingFrames.push(Buffer.from(payload));
      }
    }
  }

  /** One request, one reply; the reply may be an error_resp. */
  async roundtrip(message: Message): Promise<Message> {
    if (this.awaitingReply) {
      throw new LifecycleError("a request is already outstanding on this connection");
    }
    if (this.failure) throw this.failure;
    this.awaitingReply = true;
    try {
      const frame = encodeFrame(message);
      this.recorder?.("c2s", frame);
      this.socket.write(frame);
      const payload = await this.nextFrame();
      return decodePayload(payload);
    } finally {
      this.awaitingReply = false;
    }
  }

  private nextFrame(): Promise<Buffer> {
    const queued = this.pendingFrames.shift();
    if (queued !== undefined) return Promise.resolve(queued);
    if (this.failure) return Promise.reject(this.failure);
    return new Promise((resolve, reject) => {
      this.waiter = { resolve, reject };
    });
  }

  destroy() {
    this.socket.destroy();
  }
}

async function exchange(conn: Connection, message: Message): Promise<Message> {
  const reply = await conn.roundtrip(message);
  if (reply.type === "error_resp") {
    throw new RemoteError(reply.body.code, reply.body.detail);
  }
  return reply;
}

export interface MakeOptions {
  /** init-message scenario parameter overrides */
  args?: Record<string, string>;
  connectTimeoutMs?: number;
  /** observe every frame on the wire (testing hook) */
  recorder?: FrameRecorder;
}

function connectSocket(host: string, port: number, timeoutMs: number): Promise<net.Socket> {
  return new Promise((resolve, reject) => {
    const socket = net.createConnection({ host, port });
    const timer = setTimeout(() => {
      socket.destroy();
      reject(new TransportError(`connect timeout after ${timeoutMs} ms`));
    }, timeoutMs);
    socket.once("connect", () => {
      clearTimeout(timer);
      socket.setNoDelay(true);
      resolve(socket);
    });
    socket.once("error", (err) => {
      clearTimeout(timer);
      reject(new TransportError(`cannot connect to ${host}:${port}: ${err}`));
    });
  });
}

function awaitListening(child: ChildProcess, timeoutMs: number): Promise<number> {
  return new Promise((resolve, reject) => {
    let output = "";
    const timer = setTimeout(() => {
      child.kill();
      reject(new TransportError(`server did not announce LISTENING within ${timeoutMs} ms`));
    }, timeoutMs);
    const onData = (chunk: Buffer) => {
      output += chunk.toString();
      const match = output.match(/LISTENING (\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(Number(match[1]));
      }
    };
    child.stdout?.on("data", onData);
    child.stderr?.on("data", (chunk: Buffer) => {
      output += chunk.toString();
    });
    child.once("exit", (code) => {
      clearTimeout(timer);
      reject(
        new TransportError(`server exited with status ${code} before listening: ${output.trim()}`),
      );
    });
  });
}

/** Gym-style environment over the wire: make / reset / step / close. */
export class GymStyleEnv {
  private started = false;
  private done = false;
  private closed = false;

  private constructor(
    private readonly conn: Connection,
    public readonly observationSpace: SpaceTree,
    public readonly actionSpace: SpaceTree,
    private readonly child: ChildProcess | null,
  ) {}

  /**
   * `target` is either "tcp://host:port" for a running server or an argv
   * array for a server command that prints "LISTENING <port>".
   */
  static async make(target: string | string[], options: MakeOptions = {}): Promise<GymStyleEnv> {
    const timeoutMs = options.connectTimeoutMs ?? 10_000;
    let host = "127.0.0.1";
    let port: number;
    let child: ChildProcess | null = null;
    if (typeof target === "string") {
      const match = target.match(/^tcp:\/\/([^:/]+):(\d+)$/);
      if (!match) throw new TransportError(`bad endpoint ${target}; expected tcp://host:port`);
      host = match[1];
      port = Number(match[2]);
    } else {
      if (target.length === 0) throw new TransportError("empty spawn command");
      child = spawn(target[0], target.slice(1), { stdio: ["ignore", "pipe", "pipe"] });
      port = await awaitListening(child, timeoutMs);
    }
    try {
      const socket = await connectSocket(host, port, timeoutMs);
      const conn = new Connection(socket, options.recorder);
      const reply = await exchange(conn, {
        type: "init_req",
        body: { args: options.args ?? {} },
      });
      if (reply.type !== "init_resp") {
        throw new TransportError(`expected init_resp, got ${reply.type}`);
      }
      return new GymStyleEnv(conn, reply.body.observation_space, reply.body.action_space, child);
    } catch (err) {
      child?.kill();
      throw err;
    }
  }

  async reset(): Promise<ContainerTree> {
    this.checkOpen();
    const reply = await exchange(this.conn, { type: "reset_req", body: {} });
    if (reply.type !== "reset_resp") {
      throw new TransportError(`expected reset_resp, got ${reply.type}`);
    }
    if (!conforms(reply.body.observation, this.observationSpace)) {
      throw new TransportError("initial observation does not conform to the observation space");
    }
    this.started = true;
    this.done = false;
    return reply.body.observation;
  }

  async step(action: ContainerTree): Promise<StepOutcome> {
    this.checkOpen();
    if (!this.started) throw new LifecycleError("reset the environment before stepping");
    if (this.done) throw new LifecycleError("episode is over; reset to continue");
    if (!conforms(action, this.actionSpace)) {
      throw new LifecycleError("action does not conform to the action space");
    }
    const reply = await exchange(this.conn, { type: "step_req", body: { action } });
    if (reply.type !== "step_resp") {
      throw new TransportError(`expected step_resp, got ${reply.type}`);
    }
    if (!conforms(reply.body.observation, this.observationSpace)) {
      throw new TransportError("step observation does not conform to the observation space");
    }
    if (reply.body.done) this.done = true;
    return {
      observation: reply.body.observation,
      reward: reply.body.reward,
      done: reply.body.done,
      doneReason: reply.body.done_reason,
      info: reply.body.info,
    };
  }

  async close(): Promise<void> {
    if (this.closed) return;
    this.closed = true;
    try {
      await this.conn.roundtrip({ type: "close_req", body: {} });
    } catch {
      // best effort: the session is going away either way
    } finally {
      this.conn.destroy();
      if (this.child && this.child.exitCode === null) {
        await new Promise<void>((resolve) => {
          const timer = setTimeout(() => {
            this.child!.kill();
            resolve();
          }, 5000);
          this.child!.once("exit", () => {
            clearTimeout(timer);
            resolve();
          });
        });
      }
    }
  }

  private checkOpen() {
    if (this.closed) throw new LifecycleError("environment is closed");
  }
}
