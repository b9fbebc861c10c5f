import http from "node:http";
import { afterEach, describe, expect, it } from "vitest";

import { DashboardClient, type ConnectionStatus } from "../src/dashboard.js";
import type { ControlAck, EpochRecord } from "../src/types.js";
import { rec, sseFrame, until } from "./helpers.js";

const FAST_BACKOFF = { initialMs: 10, factor: 2, maxMs: 100 };

let servers: http.Server[] = [];
let clients: DashboardClient[] = [];

afterEach(async () => {
  for (const client of clients) client.close();
  clients = [];
  await Promise.all(
    servers.map((server) => {
      server.closeAllConnections();
      return new Promise<void>((resolve) => server.close(() => resolve()));
    }),
  );
  servers = [];
});

function listen(handler: http.RequestListener, port = 0): Promise<{ base: string; port: number }> {
  const server = http.createServer(handler);
  servers.push(server);
  return new Promise((resolve) => {
    server.listen(port, "127.0.0.1", () => {
      const bound = (server.address() as { port: number }).port;
      resolve({ base: `http://127.0.0.1:${bound}`, port: bound });
    });
  });
}

function track(client: DashboardClient): DashboardClient {
  clients.push(client);
  return client;
}

const SESSION_INFO = { status: "running", epoch: 0, reason: null, config: { seed: 0 } };

function sendSession(res: http.ServerResponse): void {
  res.writeHead(200, { "content-type": "application/json" });
  res.end(JSON.stringify(SESSION_INFO));
}

/**
 * A scriptable stand-in for the monitor service: serves `records` on
 * /records?from and hands each /stream connection to `onStream`.
 */
function fakeService(
  records: EpochRecord[],
  onStream: (res: http.ServerResponse, connection: number) => void,
  port = 0,
): Promise<{ base: string; port: number }> {
  let connections = 0;
  return listen((req, res) => {
    const url = new URL(req.url!, "http://x");
    if (url.pathname === "/session") {
      sendSession(res);
    } else if (url.pathname === "/records") {
      const from = Number(url.searchParams.get("from") ?? "1");
      const body = JSON.stringify(records.filter((r) => r.epoch >= from));
      res.writeHead(200, { "content-type": "application/json" });
      res.end(body);
    } else if (url.pathname === "/stream") {
      res.writeHead(200, { "content-type": "text/event-stream" });
      connections += 1;
      onStream(res, connections);
    } else {
      res.writeHead(404);
      res.end();
    }
  }, port);
}

describe("DashboardClient", () => {
  it("backfills history, appends live events, and ends final", async () => {
    const history = [rec(1), rec(2), rec(3)];
    const { base } = await fakeService(history, (res) => {
      res.write(sseFrame(rec(4)));
      res.write(sseFrame(rec(5, { region: "green" })));
      res.write(sseFrame({ type: "stopped", reason: "max_epochs" }));
      res.end();
    });

    const statuses: ConnectionStatus[] = [];
    const client = track(
      new DashboardClient(base, {
        backoff: FAST_BACKOFF,
        handlers: { onStatus: (s) => statuses.push(s) },
      }),
    );
    const stopped = await client.connect();

    expect(client.view.records().map((r) => r.epoch)).toEqual([1, 2, 3, 4, 5]);
    expect(client.view.regionBadge()).toBe("green");
    expect(client.view.session).toEqual(SESSION_INFO);
    expect(stopped).toEqual({ type: "stopped", reason: "max_epochs" });
    expect(client.status).toBe("final");
    expect(client.stopReason).toBe("max_epochs");
    expect(statuses).toEqual(["live", "final"]);
  });

  it("fills an epoch jump in the stream from /records before applying it", async () => {
    const records = [rec(1), rec(2), rec(3), rec(4)];
    const { base } = await listen((req, res) => {
      const url = new URL(req.url!, "http://x");
      if (url.pathname === "/session") {
        sendSession(res);
      } else if (url.pathname === "/records") {
        const from = Number(url.searchParams.get("from") ?? "1");
        // nothing yet at connect time; the hole 2..4 is served later
        const body = from === 1 ? [] : records.filter((r) => r.epoch >= from);
        res.writeHead(200, { "content-type": "application/json" });
        res.end(JSON.stringify(body));
      } else if (url.pathname === "/stream") {
        res.writeHead(200, { "content-type": "text/event-stream" });
        res.write(sseFrame(rec(1)));
        res.write(sseFrame(rec(5))); // epochs 2..4 dropped from the stream
        res.write(sseFrame({ type: "stopped", reason: "max_epochs" }));
        res.end();
      } else {
        res.writeHead(404);
        res.end();
      }
    });

    const client = track(new DashboardClient(base, { backoff: FAST_BACKOFF }));
    await client.connect();

    expect(client.view.records().map((r) => r.epoch)).toEqual([1, 2, 3, 4, 5]);
    expect(client.view.gaps()).toEqual([]);
  });

  it("reports disconnected while unreachable, then converges after retries", async () => {
    // a real service, but reached through a flaky fetch that refuses the
    // first three attempts
    const { base } = await fakeService([rec(1), rec(2)], (res) => {
      res.write(sseFrame(rec(3)));
      res.write(sseFrame({ type: "stopped", reason: "max_epochs" }));
      res.end();
    });

    let attempts = 0;
    const flaky = (async (url: Parameters<typeof fetch>[0], init?: RequestInit) => {
      attempts += 1;
      if (attempts <= 3) {
        throw new TypeError("fetch failed: connection refused");
      }
      return fetch(url, init);
    }) as typeof fetch;

    const statuses: ConnectionStatus[] = [];
    const client = track(
      new DashboardClient(base, {
        backoff: FAST_BACKOFF,
        fetchFn: flaky,
        handlers: { onStatus: (s) => statuses.push(s) },
      }),
    );
    const started = Date.now();
    await client.connect();
    const elapsed = Date.now() - started;

    expect(client.view.records().map((r) => r.epoch)).toEqual([1, 2, 3]);
    expect(statuses[0]).toBe("disconnected");
    expect(statuses).toContain("live");
    expect(client.status).toBe("final");
    // three failed attempts wait 10 + 20 + 40 ms between retries
    expect(elapsed).toBeGreaterThanOrEqual(60);
  });

  it("treats a stream that ends without a stopped event as a drop and backfills the rest", async () => {
    const records = [rec(1), rec(2), rec(3), rec(4)];
    const fromsSeen: number[] = [];
    let recordsCalls = 0;
    let connections = 0;
    const { base } = await listen((req, res) => {
      const url = new URL(req.url!, "http://x");
      if (url.pathname === "/session") {
        sendSession(res);
      } else if (url.pathname === "/records") {
        recordsCalls += 1;
        const from = Number(url.searchParams.get("from") ?? "1");
        fromsSeen.push(from);
        // epoch 4 only exists by the time the client reconnects
        const visible = recordsCalls === 1 ? records.slice(0, 3) : records;
        res.writeHead(200, { "content-type": "application/json" });
        res.end(JSON.stringify(visible.filter((r) => r.epoch >= from)));
      } else if (url.pathname === "/stream") {
        connections += 1;
        res.writeHead(200, { "content-type": "text/event-stream" });
        if (connections === 1) {
          res.write(sseFrame(rec(3)));
          res.end(); // dropped connection, no terminal event
        } else {
          res.write(sseFrame({ type: "stopped", reason: "control" }));
          res.end();
        }
      } else {
        res.writeHead(404);
        res.end();
      }
    });

    const client = track(new DashboardClient(base, { backoff: FAST_BACKOFF }));
    const stopped = await client.connect();

    expect(stopped).toEqual({ type: "stopped", reason: "control" });
    expect(client.view.records().map((r) => r.epoch)).toEqual([1, 2, 3, 4]);
    // the reconnect backfilled from the epoch after the last one seen
    expect(fromsSeen).toContain(4);
  });

  it("sends controls, keeps the ack pending, and toasts a 409", async () => {
    let controlBody: unknown = null;
    const { base } = await listen((req, res) => {
      const url = new URL(req.url!, "http://x");
      if (url.pathname === "/control" && req.method === "POST") {
        let raw = "";
        req.on("data", (d) => (raw += d));
        req.on("end", () => {
          controlBody = JSON.parse(raw);
          res.writeHead(200, { "content-type": "application/json" });
          res.end(
            JSON.stringify({ accepted: true, kind: "set_learning_rate", applies_at_epoch: 9 }),
          );
        });
      } else {
        res.writeHead(404);
        res.end();
      }
    });

    const toasts: string[] = [];
    const acks: ControlAck[] = [];
    const client = track(
      new DashboardClient(base, {
        backoff: FAST_BACKOFF,
        handlers: { onToast: (m) => toasts.push(m), onAck: (a) => acks.push(a) },
      }),
    );

    const ack = await client.setLearningRate(5e-4);
    expect(ack).not.toBeNull();
    expect(ack!.applies_at_epoch).toBe(9);
    expect(controlBody).toEqual({ kind: "set_learning_rate", value: 5e-4 });
    expect(acks).toHaveLength(1);
    expect(client.view.pendingAcks()).toHaveLength(1);

    // malformed input never reaches the wire
    controlBody = null;
    const blocked = await client.setLearningRate(-1);
    expect(blocked).toBeNull();
    expect(controlBody).toBeNull();
    expect(toasts.some((t) => t.includes("> 0"))).toBe(true);
  });

  it("toasts when the session is already stopped", async () => {
    const { base } = await listen((req, res) => {
      if (req.url === "/control") {
        res.writeHead(409, { "content-type": "application/json" });
        res.end(JSON.stringify({ error: { message: "session is stopped" } }));
      } else {
        res.writeHead(404);
        res.end();
      }
    });

    const toasts: string[] = [];
    const client = track(
      new DashboardClient(base, { handlers: { onToast: (m) => toasts.push(m) } }),
    );
    const ack = await client.stop();
    expect(ack).toBeNull();
    expect(toasts).toEqual(["stop rejected: session is stopped"]);
  });

  it("close() ends connect promptly without a terminal event", async () => {
    const { base } = await fakeService([rec(1)], (res) => {
      res.write(sseFrame(rec(2)));
      // hold the connection open forever
    });

    const client = track(new DashboardClient(base, { backoff: FAST_BACKOFF }));
    const done = client.connect();
    await until(() => client.view.lastEpoch() >= 2, 5000);
    client.close();
    const stopped = await done;
    expect(stopped).toBeNull();
    expect(client.stopReason).toBeNull();
  });
});
