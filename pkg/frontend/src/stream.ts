import type { StreamEvent } from "./types.js";

// Minimal text/event-stream reader over fetch. The service only ever
// emits `data:` lines carrying one JSON document per event, so comments,
// event names, ids and retry hints are skipped rather than modeled.

export async function* sseData(body: ReadableStream<Uint8Array>): AsyncGenerator<string> {
  const reader = body.getReader();
  const decoder = new TextDecoder();
  let buffered = "";
  let dataLines: string[] = [];
  try {
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffered += decoder.decode(value, { stream: true });
      let cut: number;
      while ((cut = buffered.indexOf("\n")) >= 0) {
        let line = buffered.slice(0, cut);
        buffered = buffered.slice(cut + 1);
        if (line.endsWith("\r")) line = line.slice(0, -1);
        if (line === "") {
          if (dataLines.length > 0) {
            yield dataLines.join("\n");
            dataLines = [];
          }
        } else if (line.startsWith("data:")) {
          dataLines.push(line.slice(5).replace(/^ /, ""));
        }
      }
    }
    if (dataLines.length > 0) {
      yield dataLines.join("\n");
    }
  } finally {
    // stops the transfer when the consumer bails out early
    await reader.cancel().catch(() => undefined);
  }
}

export interface StreamOptions {
  signal?: AbortSignal;
  fetchFn?: typeof fetch;
}

/**
 * Subscribe to the service's event stream and yield parsed events until
 * the connection closes. A clean session end arrives as a
 * `{type: "stopped"}` event before the close; a close without one means
 * the connection dropped and the caller should reconnect.
 */
export async function* streamEvents(
  url: string,
  options: StreamOptions = {},
): AsyncGenerator<StreamEvent> {
  const fetchFn = options.fetchFn ?? fetch;
  const response = await fetchFn(url, {
    signal: options.signal,
    headers: { accept: "text/event-stream" },
  });
  if (!response.ok) {
    throw new Error(`stream request failed: HTTP ${response.status}`);
  }
  if (response.body === null) {
    throw new Error("stream response has no body");
  }
  for await (const data of sseData(response.body)) {
    yield JSON.parse(data) as StreamEvent;
  }
}
