import type { EpochRecord, YesBounds } from "../src/types.js";

export function bounds(yes0: number, bottom: number, extra: Partial<YesBounds> = {}): YesBounds {
  return {
    yes0,
    yes_k: { "1": bottom },
    cloud_top: yes0,
    cloud_bottom: bottom,
    best_checkpoints: [2],
    ...extra,
  };
}

export function rec(epoch: number, extra: Partial<EpochRecord> = {}): EpochRecord {
  return {
    type: "epoch",
    epoch,
    loss: 1 / epoch,
    lr: 1e-3,
    weight_change: 0.01,
    region: "yellow",
    region_stale: false,
    guidance: false,
    bounds: null,
    events: [],
    wall_time_ms: 0.5,
    ...extra,
  };
}

export async function until(
  cond: () => boolean,
  timeoutMs = 15000,
  stepMs = 10,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!cond()) {
    if (Date.now() > deadline) {
      throw new Error(`condition not met within ${timeoutMs}ms`);
    }
    await new Promise((resolve) => setTimeout(resolve, stepMs));
  }
}

/** One SSE frame the way the service writes it. */
export function sseFrame(payload: unknown): string {
  return `data: ${JSON.stringify(payload)}\n\n`;
}
