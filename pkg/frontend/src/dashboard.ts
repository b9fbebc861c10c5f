import { ControlRejectedError, sendControl } from "./controls.js";
import { LiveRunView } from "./store.js";
import { streamEvents } from "./stream.js";
import type {
  ControlAck,
  ControlCommand,
  EpochRecord,
  SessionInfo,
  StoppedEvent,
  StreamEvent,
} from "./types.js";

export type ConnectionStatus = "connecting" | "live" | "disconnected" | "final";

export interface BackoffPolicy {
  initialMs: number;
  factor: number;
  maxMs: number;
}

export const DEFAULT_BACKOFF: BackoffPolicy = { initialMs: 500, factor: 2, maxMs: 30000 };

export interface DashboardHandlers {
  onRecord?: (record: EpochRecord) => void;
  onStatus?: (status: ConnectionStatus) => void;
  onToast?: (message: string) => void;
  onAck?: (ack: ControlAck) => void;
  onStopped?: (event: StoppedEvent) => void;
}

export interface DashboardOptions {
  view?: LiveRunView;
  fetchFn?: typeof fetch;
  backoff?: BackoffPolicy;
  handlers?: DashboardHandlers;
}

function delay(ms: number, signal: AbortSignal): Promise<void> {
  return new Promise((resolve) => {
    if (signal.aborted) {
      resolve();
      return;
    }
    const timer = setTimeout(done, ms);
    signal.addEventListener("abort", done, { once: true });
    function done() {
      clearTimeout(timer);
      signal.removeEventListener("abort", done);
      resolve();
    }
  });
}

export class DashboardClient {
  // Mirrors one running session. Contract:
  // 1. all state shown comes from the server; nothing is classified or
  //    recomputed client-side.
  // 2. connect() refreshes the session metadata, backfills via /records,
  //    then appends live stream events; an epoch jump in the stream is
  //    backfilled before it lands so the view never shows a hole.
  // 3. a dropped connection flips status to "disconnected" and retries
  //    with exponential backoff, backfilling from the last seen epoch.
  // 4. a {type:"stopped"} event is terminal: status becomes "final" and
  //    reconnects cease.

  readonly view: LiveRunView;

  #baseUrl: string;
  #fetchFn: typeof fetch;
  #backoff: BackoffPolicy;
  #handlers: DashboardHandlers;
  #status: ConnectionStatus = "connecting";
  #stopped: StoppedEvent | null = null;
  #closed = false;
  #abort = new AbortController();
  #retries = 0;

  constructor(baseUrl: string, options: DashboardOptions = {}) {
    this.#baseUrl = baseUrl.replace(/\/$/, "");
    this.view = options.view ?? new LiveRunView();
    this.#fetchFn = options.fetchFn ?? fetch;
    this.#backoff = options.backoff ?? DEFAULT_BACKOFF;
    this.#handlers = options.handlers ?? {};
  }

  get status(): ConnectionStatus {
    return this.#status;
  }

  get stopReason(): string | null {
    return this.#stopped?.reason ?? null;
  }

  /** Reconnect attempts made so far (resets once a stream delivers). */
  get retries(): number {
    return this.#retries;
  }

  /**
   * Run the subscription loop until the session ends or close() is
   * called. Resolves with the terminal event, or null when closed early.
   */
  async connect(): Promise<StoppedEvent | null> {
    let wait = this.#backoff.initialMs;
    while (!this.#closed && this.#stopped === null) {
      let delivered = false;
      try {
        await this.#fetchSession();
        await this.#backfill(this.view.lastEpoch() + 1);
        this.#setStatus("live");
        const url = `${this.#baseUrl}/stream`;
        for await (const event of streamEvents(url, {
          signal: this.#abort.signal,
          fetchFn: this.#fetchFn,
        })) {
          // one event in hand proves the connection works again
          if (!delivered) {
            delivered = true;
            wait = this.#backoff.initialMs;
            this.#retries = 0;
          }
          await this.#apply(event);
          if (this.#stopped !== null) break;
        }
        if (this.#stopped === null && !this.#closed) {
          throw new Error("stream closed without a stopped event");
        }
      } catch {
        if (this.#closed) break;
        this.#setStatus("disconnected");
        this.#retries += 1;
        await delay(wait, this.#abort.signal);
        wait = Math.min(wait * this.#backoff.factor, this.#backoff.maxMs);
      }
    }
    if (this.#stopped !== null) {
      this.#setStatus("final");
    }
    return this.#stopped;
  }

  close(): void {
    this.#closed = true;
    this.#abort.abort();
  }

  // -- operator controls; every mutation goes through POST /control

  setLearningRate(value: number): Promise<ControlAck | null> {
    return this.#send({ kind: "set_learning_rate", value });
  }

  pause(): Promise<ControlAck | null> {
    return this.#send({ kind: "pause" });
  }

  resume(): Promise<ControlAck | null> {
    return this.#send({ kind: "resume" });
  }

  stop(): Promise<ControlAck | null> {
    return this.#send({ kind: "stop" });
  }

  toggleGuidance(enabled: boolean): Promise<ControlAck | null> {
    return this.#send({ kind: "toggle_guidance", enabled });
  }

  async #send(command: ControlCommand): Promise<ControlAck | null> {
    try {
      const ack = await sendControl(this.#baseUrl, command, this.#fetchFn);
      this.view.addAck(ack);
      this.#handlers.onAck?.(ack);
      return ack;
    } catch (err) {
      if (err instanceof ControlRejectedError) {
        this.#handlers.onToast?.(`${command.kind} rejected: ${err.message}`);
        return null;
      }
      this.#handlers.onToast?.(`${command.kind} failed: ${String(err)}`);
      return null;
    }
  }

  async #apply(event: StreamEvent): Promise<void> {
    if (event.type === "stopped") {
      this.#stopped = event;
      this.#handlers.onStopped?.(event);
      return;
    }
    const last = this.view.lastEpoch();
    if (event.epoch > last + 1) {
      // stream missed events for this consumer; refetch the hole
      await this.#backfill(last + 1);
    }
    this.view.upsert(event);
    this.#handlers.onRecord?.(event);
  }

  async #fetchSession(): Promise<void> {
    const response = await this.#fetchFn(`${this.#baseUrl}/session`, {
      signal: this.#abort.signal,
    });
    if (!response.ok) {
      throw new Error(`session fetch failed: HTTP ${response.status}`);
    }
    this.view.setSession((await response.json()) as SessionInfo);
  }

  async #backfill(fromEpoch: number): Promise<void> {
    const url = `${this.#baseUrl}/records?from=${fromEpoch}`;
    const response = await this.#fetchFn(url, { signal: this.#abort.signal });
    if (!response.ok) {
      throw new Error(`backfill failed: HTTP ${response.status}`);
    }
    const records = (await response.json()) as EpochRecord[];
    for (const record of records) {
      this.view.upsert(record);
      this.#handlers.onRecord?.(record);
    }
  }

  #setStatus(status: ConnectionStatus): void {
    if (this.#status !== status) {
      this.#status = status;
      this.#handlers.onStatus?.(status);
    }
  }
}
