import { spawn, type ChildProcess } from "node:child_process";
import fs from "node:fs";
import os from "node:os";
import path from "node:path";
import { afterEach, describe, expect, it } from "vitest";

import { DashboardClient, type ConnectionStatus } from "../src/dashboard.js";
import type { EpochRecord } from "../src/types.js";
import { until } from "./helpers.js";

// End-to-end against the real monitor service: spawn `traincert serve`,
// drive it the way the browser client would, and check the round trips
// the dashboard depends on.

const BACKOFF = { initialMs: 50, factor: 2, maxMs: 500 };

let children: ChildProcess[] = [];
let clients: DashboardClient[] = [];
let tmpdirs: string[] = [];

afterEach(() => {
  for (const client of clients) client.close();
  clients = [];
  for (const child of children) {
    if (child.exitCode === null) child.kill("SIGKILL");
  }
  children = [];
  for (const dir of tmpdirs) {
    fs.rmSync(dir, { recursive: true, force: true });
  }
  tmpdirs = [];
});

function workdir(): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "dashboard-it-"));
  tmpdirs.push(dir);
  return dir;
}

function writeConfig(dir: string, maxEpochs: number): { config: string; jsonl: string } {
  const jsonl = path.join(dir, "run.jsonl");
  const config = path.join(dir, "config.json");
  fs.writeFileSync(
    config,
    JSON.stringify({
      task: { kind: "phase_retrieval", seed: 0, params: { n: 6, d: 40 } },
      network: { layers: [6, 8, 6], use_bias: false },
      optimizer: { kind: "adam", eta0: 1e-3, decay_factor: 0.9, period_epochs: 50 },
      batch_size: 10,
      max_epochs: maxEpochs,
      bound_cadence: 1,
      seed: 0,
      throttle_ms: 15,
      outputs: { jsonl_path: jsonl },
    }),
  );
  return { config, jsonl };
}

interface Service {
  child: ChildProcess;
  port: number;
  exited: Promise<number | null>;
}

function spawnService(configPath: string, port: number): Promise<Service> {
  const child = spawn(
    "python3",
    ["-m", "traincert", "serve", "--config", configPath, "--port", String(port)],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  children.push(child);
  let stderr = "";
  child.stderr!.setEncoding("utf8");
  child.stderr!.on("data", (d: string) => (stderr += d));
  const exited = new Promise<number | null>((resolve) => {
    child.on("exit", (code) => resolve(code));
  });

  return new Promise((resolve, reject) => {
    let buffered = "";
    child.stdout!.setEncoding("utf8");
    child.stdout!.on("data", (d: string) => {
      buffered += d;
      const nl = buffered.indexOf("\n");
      if (nl < 0) return;
      try {
        const announce = JSON.parse(buffered.slice(0, nl)) as { port: number };
        resolve({ child, port: announce.port, exited });
      } catch (err) {
        reject(err);
      }
    });
    child.on("exit", (code) => reject(new Error(`service exited with ${code}\n${stderr}`)));
    setTimeout(() => reject(new Error(`no announce line\n${stderr}`)), 30_000);
  });
}

function diskRecords(jsonlPath: string): EpochRecord[] {
  return fs
    .readFileSync(jsonlPath, "utf8")
    .trim()
    .split("\n")
    .map((line) => JSON.parse(line) as { type: string })
    .filter((row): row is EpochRecord => row.type === "epoch");
}

function connectClient(port: number): DashboardClient {
  const client = new DashboardClient(`http://127.0.0.1:${port}`, { backoff: BACKOFF });
  clients.push(client);
  return client;
}

describe("against a live monitor service", () => {
  it("applies a learning-rate change to the next record and stops on command", async () => {
    const dir = workdir();
    const { config, jsonl } = writeConfig(dir, 2000);
    const service = await spawnService(config, 0);
    const client = connectClient(service.port);
    const finished = client.connect();

    await until(() => client.view.lastEpoch() >= 3);
    expect(client.view.session?.status).toBe("running");
    expect((client.view.session?.config as { max_epochs: number }).max_epochs).toBe(2000);

    const ack = await client.setLearningRate(5e-4);
    expect(ack).not.toBeNull();
    const applyAt = ack!.applies_at_epoch;
    expect(applyAt).toBeGreaterThan(0);

    await until(() => client.view.lastEpoch() >= applyAt);
    const changed = client.view.records().find((r) => r.epoch === applyAt)!;
    const before = client.view.records().find((r) => r.epoch === applyAt - 1);
    expect(changed.lr).toBe(5e-4);
    if (before !== undefined) {
      expect(before.lr).toBe(1e-3);
    }

    const stopAck = await client.stop();
    expect(stopAck).not.toBeNull();

    const stopped = await finished;
    expect(stopped).toEqual({ type: "stopped", reason: "control" });
    expect(client.status).toBe("final");
    expect(await service.exited).toBe(0);

    // what the dashboard holds is exactly what the service logged
    const logged = diskRecords(jsonl);
    expect(logged.length).toBeGreaterThan(0);
    expect(client.view.records()).toEqual(logged);
  }, 90_000);

  it("rides out a kill and restart, backfilling to match the on-disk log", async () => {
    const dir = workdir();
    const { config, jsonl } = writeConfig(dir, 120);
    const first = await spawnService(config, 0);

    const statuses: ConnectionStatus[] = [];
    const client = new DashboardClient(`http://127.0.0.1:${first.port}`, {
      backoff: BACKOFF,
      handlers: { onStatus: (s) => statuses.push(s) },
    });
    clients.push(client);
    const finished = client.connect();

    await until(() => client.view.lastEpoch() >= 10);
    first.child.kill("SIGKILL");
    await first.exited;
    await until(() => client.status === "disconnected");

    // same config, same port: the run replays deterministically
    const second = await spawnService(config, first.port);
    expect(second.port).toBe(first.port);

    const stopped = await finished;
    expect(stopped).toEqual({ type: "stopped", reason: "max_epochs" });
    expect(statuses).toContain("disconnected");
    expect(client.status).toBe("final");

    await second.exited;
    const logged = diskRecords(jsonl);
    expect(logged).toHaveLength(120);
    // records kept from before the kill carry the first process's wall
    // times; identical seeds make every other field reproducible, so the
    // trajectory itself must match the log exactly
    const timeless = (rows: readonly EpochRecord[]) =>
      rows.map(({ wall_time_ms: _, ...rest }) => rest);
    expect(timeless(client.view.records())).toEqual(timeless(logged));
  }, 90_000);

  it("rejects a malformed control server-side with a field path", async () => {
    const dir = workdir();
    const { config } = writeConfig(dir, 2000);
    const service = await spawnService(config, 0);

    const response = await fetch(`http://127.0.0.1:${service.port}/control`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ kind: "set_learning_rate", value: -5 }),
    });
    expect(response.status).toBe(400);
    const body = (await response.json()) as { error: { field: string } };
    expect(body.error.field).toBe("control.value");

    const stop = await fetch(`http://127.0.0.1:${service.port}/control`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ kind: "stop" }),
    });
    expect(stop.status).toBe(200);
    expect(await service.exited).toBe(0);
  }, 90_000);
});
