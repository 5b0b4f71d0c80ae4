/**
 * Deterministic scripted policies and the episode runner with CSV metrics
 * matching the server-side agent runner byte for byte.
 */

import type { GymStyleEnv } from "./env.js";
import type { ContainerTree } from "./protocol.js";

export type Policy = (observation: ContainerTree) => ContainerTree;

function occupiedIndex(obs: ContainerTree): number {
  if (obs.kind !== "box") throw new Error("expected a box observation");
  let best = 0;
  for (let i = 1; i < obs.data.length; i++) {
    if (obs.data[i] > obs.data[best]) best = i;
  }
  return best;
}

/** Pick the channel one past the sweep's next stop: never collides. */
export function oraclePolicy(numChannels: number): Policy {
  return (obs) => ({ kind: "discrete", value: (occupiedIndex(obs) + 2) % numChannels });
}

/** Always land on the interferer's next channel (worst case, for tests). */
export function adversaryPolicy(numChannels: number): Policy {
  return (obs) => ({ kind: "discrete", value: (occupiedIndex(obs) + 1) % numChannels });
}

export interface EpisodeMetrics {
  episode: number;
  steps: number;
  totalReward: number;
  collisions: number;
}

export async function runEpisodes(
  env: GymStyleEnv,
  policy: Policy,
  nEpisodes: number,
  maxSteps = 1_000_000,
): Promise<EpisodeMetrics[]> {
  const metrics: EpisodeMetrics[] = [];
  for (let episode = 0; episode < nEpisodes; episode++) {
    let obs = await env.reset();
    let total = 0;
    let steps = 0;
    let collisions = 0;
    while (steps < maxSteps) {
      const outcome = await env.step(policy(obs));
      total += outcome.reward;
      steps += 1;
      if (outcome.reward < 0) collisions += 1;
      obs = outcome.observation;
      if (outcome.done) break;
    }
    metrics.push({ episode, steps, totalReward: total, collisions });
  }
  return metrics;
}

function canonNumber(x: number): string {
  if (Number.isInteger(x) && Math.abs(x) <= 2 ** 53) return String(Math.trunc(x) + 0);
  return String(x);
}

export function metricsToCsv(metrics: EpisodeMetrics[]): string {
  const lines = ["episode,steps,total_reward,collisions"];
  for (const m of metrics) {
    lines.push(`${m.episode},${m.steps},${canonNumber(m.totalReward)},${m.collisions}`);
  }
  return lines.join("\n") + "\n";
}
