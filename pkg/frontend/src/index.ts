export * from "./protocol.js";
export * from "./env.js";
export * from "./agents.js";
