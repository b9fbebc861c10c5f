import http from "node:http";
import { afterEach, describe, expect, it } from "vitest";

import { sseData, streamEvents } from "../src/stream.js";
import type { StreamEvent } from "../src/types.js";
import { sseFrame } from "./helpers.js";

function chunkStream(chunks: string[]): ReadableStream<Uint8Array> {
  const encoder = new TextEncoder();
  return new ReadableStream({
    start(controller) {
      for (const chunk of chunks) {
        controller.enqueue(encoder.encode(chunk));
      }
      controller.close();
    },
  });
}

async function collect<T>(source: AsyncGenerator<T>): Promise<T[]> {
  const out: T[] = [];
  for await (const item of source) {
    out.push(item);
  }
  return out;
}

describe("sseData", () => {
  it("yields one payload per blank-line-terminated frame", async () => {
    const out = await collect(sseData(chunkStream(['data: {"a":1}\n\n', 'data: {"b":2}\n\n'])));
    expect(out).toEqual(['{"a":1}', '{"b":2}']);
  });

  it("reassembles frames split across arbitrary chunk boundaries", async () => {
    const text = 'data: {"epoch":12,"loss":0.25}\n\n';
    for (const cut of [1, 5, 8, text.length - 2]) {
      const out = await collect(sseData(chunkStream([text.slice(0, cut), text.slice(cut)])));
      expect(out).toEqual(['{"epoch":12,"loss":0.25}']);
    }
  });

  it("joins multi-line data and tolerates CRLF", async () => {
    const out = await collect(sseData(chunkStream(["data: first\r\ndata: second\r\n\r\n"])));
    expect(out).toEqual(["first\nsecond"]);
  });

  it("skips comments and non-data fields", async () => {
    const out = await collect(
      sseData(chunkStream([": ping\nevent: epoch\nid: 4\nretry: 100\ndata: x\n\n"])),
    );
    expect(out).toEqual(["x"]);
  });

  it("flushes a trailing frame that ends with the connection", async () => {
    const out = await collect(sseData(chunkStream(["data: tail\n"])));
    expect(out).toEqual(["tail"]);
  });
});

describe("streamEvents", () => {
  let server: http.Server | null = null;

  afterEach(() => {
    server?.close();
    server = null;
  });

  function listen(handler: http.RequestListener): Promise<string> {
    server = http.createServer(handler);
    return new Promise((resolve) => {
      server!.listen(0, "127.0.0.1", () => {
        const addr = server!.address() as { port: number };
        resolve(`http://127.0.0.1:${addr.port}`);
      });
    });
  }

  it("parses a served event sequence ending in a stopped frame", async () => {
    const base = await listen((_req, res) => {
      res.writeHead(200, { "content-type": "text/event-stream" });
      res.write(sseFrame({ type: "epoch", epoch: 1, loss: 0.5 }));
      res.write(sseFrame({ type: "epoch", epoch: 2, loss: 0.4 }));
      res.write(sseFrame({ type: "stopped", reason: "max_epochs" }));
      res.end();
    });

    const events: StreamEvent[] = await collect(streamEvents(`${base}/stream`));
    expect(events).toHaveLength(3);
    expect(events[0]).toMatchObject({ type: "epoch", epoch: 1 });
    expect(events[2]).toEqual({ type: "stopped", reason: "max_epochs" });
  });

  it("throws on a non-200 response", async () => {
    const base = await listen((_req, res) => {
      res.writeHead(503);
      res.end();
    });
    await expect(collect(streamEvents(`${base}/stream`))).rejects.toThrow(/503/);
  });

  it("stops promptly when aborted mid-stream", async () => {
    const base = await listen((_req, res) => {
      res.writeHead(200, { "content-type": "text/event-stream" });
      res.write(sseFrame({ type: "epoch", epoch: 1, loss: 0.5 }));
      // then hold the connection open
    });

    const controller = new AbortController();
    const seen: StreamEvent[] = [];
    const err = await (async () => {
      try {
        for await (const event of streamEvents(`${base}/stream`, {
          signal: controller.signal,
        })) {
          seen.push(event);
          controller.abort();
        }
        return null;
      } catch (e) {
        return e as Error;
      }
    })();

    expect(seen).toHaveLength(1);
    expect(err).not.toBeNull();
    expect((err as Error).name).toMatch(/AbortError/);
  });
});
