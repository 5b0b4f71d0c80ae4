/**
 * Wire protocol: length-prefixed frames carrying canonical JSON documents.
 *
 * Every frame is a 4-byte big-endian payload length followed by that many
 * bytes of UTF-8 text: one object with a `type` field and a `body` object.
 * Output is canonical so transcripts are byte-exact: keys sorted, no
 * whitespace, ASCII only, integral numbers without a decimal point.
 */

export const MAX_FRAME_BYTES = 16 * 1024 * 1024;

export type SpaceTree =
  | { kind: "discrete"; n: number }
  | { kind: "box"; low: number; high: number; shape: number[]; dtype: string }
  | { kind: "tuple"; children: SpaceTree[] }
  | { kind: "dict"; entries: Record<string, SpaceTree> };

export type ContainerTree =
  | { kind: "discrete"; value: number }
  | { kind: "box"; shape: number[]; dtype: string; data: number[] }
  | { kind: "tuple"; items: ContainerTree[] }
  | { kind: "dict"; entries: Record<string, ContainerTree> };

export interface StepFields {
  observation: ContainerTree;
  reward: number;
  done: boolean;
  done_reason: string;
  info: string;
}

export type Message =
  | { type: "init_req"; body: { args: Record<string, string> } }
  | { type: "init_resp"; body: { observation_space: SpaceTree; action_space: SpaceTree } }
  | { type: "reset_req"; body: Record<string, never> }
  | { type: "reset_resp"; body: { observation: ContainerTree } }
  | { type: "step_req"; body: { action: ContainerTree } }
  | { type: "step_resp"; body: StepFields }
  | { type: "close_req"; body: Record<string, never> }
  | { type: "close_resp"; body: Record<string, never> }
  | { type: "error_resp"; body: { code: string; detail: string } };

export class WireFormatError extends Error {}

const MESSAGE_TYPES = new Set([
  "init_req",
  "init_resp",
  "reset_req",
  "reset_resp",
  "step_req",
  "step_resp",
  "close_req",
  "close_resp",
  "error_resp",
]);

function canonNumber(x: number): string {
  if (!Number.isFinite(x)) {
    throw new WireFormatError("non-finite numbers cannot be encoded");
  }
  if (Number.isInteger(x) && Math.abs(x) <= 2 ** 53) {
    // normalizes -0 as well
    return String(Math.trunc(x) + 0);
  }
  return String(x);
}

function canonString(s: string): string {
  // JSON string with all non-ASCII escaped, matching the server's writer
  let out = '"';
  for (const ch of s) {
    const code = ch.codePointAt(0)!;
    if (ch === '"') out += '\\"';
    else if (ch === "\\") out += "\\\\";
    else if (ch === "\b") out += "\\b";
    else if (ch === "\f") out += "\\f";
    else if (ch === "\n") out += "\\n";
    else if (ch === "\r") out += "\\r";
    else if (ch === "\t") out += "\\t";
    else if (code < 0x20 || code > 0x7e) {
      for (let i = 0; i < ch.length; i++) {
        out += "\\u" + ch.charCodeAt(i).toString(16).padStart(4, "0");
      }
    } else out += ch;
  }
  return out + '"';
}

export function canonicalJson(value: unknown): string {
  if (value === true) return "true";
  if (value === false) return "false";
  if (typeof value === "string") return canonString(value);
  if (typeof value === "number") return canonNumber(value);
  if (Array.isArray(value)) {
    return "[" + value.map(canonicalJson).join(",") + "]";
  }
  if (value !== null && typeof value === "object") {
    const entries = Object.entries(value as Record<string, unknown>).sort(([a], [b]) =>
      a < b ? -1 : a > b ? 1 : 0,
    );
    return "{" + entries.map(([k, v]) => `${canonString(k)}:${canonicalJson(v)}`).join(",") + "}";
  }
  throw new WireFormatError(`cannot encode ${typeof value}`);
}

/** Message -> length-prefixed frame bytes. */
export function encodeFrame(message: Message): Buffer {
  const payload = Buffer.from(canonicalJson(message), "utf8");
  if (payload.length > MAX_FRAME_BYTES) {
    throw new WireFormatError(`payload of ${payload.length} bytes exceeds ${MAX_FRAME_BYTES}`);
  }
  const frame = Buffer.alloc(4 + payload.length);
  frame.writeUInt32BE(payload.length, 0);
  payload.copy(frame, 4);
  return frame;
}

/** Frame payload bytes -> Message (tolerant of non-canonical key order). */
export function decodePayload(payload: Buffer): Message {
  let tree: unknown;
  try {
    tree = JSON.parse(payload.toString("utf8"));
  } catch (err) {
    throw new WireFormatError(`payload is not valid JSON: ${err}`);
  }
  if (typeof tree !== "object" || tree === null || Array.isArray(tree)) {
    throw new WireFormatError("message document must be an object");
  }
  const doc = tree as { type?: unknown; body?: unknown };
  if (typeof doc.type !== "string" || !MESSAGE_TYPES.has(doc.type)) {
    throw new WireFormatError(`unknown message type ${String(doc.type)}`);
  }
  if (typeof doc.body !== "object" || doc.body === null) {
    throw new WireFormatError("message body must be an object");
  }
  return doc as Message;
}

export function discrete(value: number): ContainerTree {
  return { kind: "discrete", value };
}

export function boxVector(data: number[], dtype: string): ContainerTree {
  return { kind: "box", shape: [data.length], dtype, data };
}

/** Structural + bounds conformance of a container against a space. */
export function conforms(c: ContainerTree, s: SpaceTree): boolean {
  if (s.kind === "discrete") {
    return c.kind === "discrete" && Number.isInteger(c.value) && c.value >= 0 && c.value < s.n;
  }
  if (s.kind === "box") {
    return (
      c.kind === "box" &&
      c.dtype === s.dtype &&
      c.shape.length === s.shape.length &&
      c.shape.every((d, i) => d === s.shape[i]) &&
      c.data.length === s.shape.reduce((a, b) => a * b, 1) &&
      c.data.every((v) => v >= s.low && v <= s.high)
    );
  }
  if (s.kind === "tuple") {
    return (
      c.kind === "tuple" &&
      c.items.length === s.children.length &&
      c.items.every((item, i) => conforms(item, s.children[i]))
    );
  }
  if (c.kind !== "dict") return false;
  const cKeys = Object.keys(c.entries).sort();
  const sKeys = Object.keys(s.entries).sort();
  return (
    cKeys.length === sKeys.length &&
    cKeys.every((k, i) => k === sKeys[i] && conforms(c.entries[k], s.entries[k]))
  );
}
