import type { ControlAck, EpochRecord, Region, SessionInfo } from "./types.js";

export const DEFAULT_CAPACITY = 20000;

export interface EpochGap {
  from: number;
  to: number;
}

export class LiveRunView {
  // What the chart is allowed to see. Contract:
  // 1. records() is ascending in epoch with no duplicates.
  // 2. upsert is idempotent: replaying an epoch replaces it in place, so
  //    overlapping backfills and live events can race without harm.
  // 3. gaps() lists epoch ranges missing between retained records; the
  //    owner backfills them via /records before the chart shows a hole.
  // 4. at most `capacity` records are kept; the oldest epochs fall off.

  #records: EpochRecord[] = [];
  #acks: ControlAck[] = [];
  #session: SessionInfo | null = null;
  #capacity: number;

  constructor(capacity: number = DEFAULT_CAPACITY) {
    if (!Number.isInteger(capacity) || capacity < 1) {
      throw new RangeError(`capacity must be a positive integer, got ${capacity}`);
    }
    this.#capacity = capacity;
  }

  get capacity(): number {
    return this.#capacity;
  }

  get size(): number {
    return this.#records.length;
  }

  upsert(record: EpochRecord): void {
    if (!Number.isInteger(record.epoch) || record.epoch < 1) {
      throw new RangeError(`epoch must be a positive integer, got ${record.epoch}`);
    }
    const at = this.#indexFor(record.epoch);
    const existing = this.#records[at];
    if (existing !== undefined && existing.epoch === record.epoch) {
      this.#records[at] = record;
    } else {
      this.#records.splice(at, 0, record);
      if (this.#records.length > this.#capacity) {
        this.#records.splice(0, this.#records.length - this.#capacity);
      }
    }
    const seen = this.lastEpoch();
    this.#acks = this.#acks.filter((ack) => ack.applies_at_epoch > seen);
  }

  /** Records in epoch order, oldest retained epoch first. */
  records(): readonly EpochRecord[] {
    return this.#records;
  }

  latest(): EpochRecord | null {
    return this.#records[this.#records.length - 1] ?? null;
  }

  /** Highest epoch seen so far; 0 before any record arrives. */
  lastEpoch(): number {
    return this.latest()?.epoch ?? 0;
  }

  firstEpoch(): number {
    return this.#records[0]?.epoch ?? 0;
  }

  /**
   * The badge is always the latest record's region, never something the
   * client computed. Null before the first record.
   */
  regionBadge(): Region | null {
    return this.latest()?.region ?? null;
  }

  /** Missing epoch ranges between retained records, ascending. */
  gaps(): EpochGap[] {
    const out: EpochGap[] = [];
    for (let i = 1; i < this.#records.length; i++) {
      const prev = this.#records[i - 1]!.epoch;
      const next = this.#records[i]!.epoch;
      if (next > prev + 1) {
        out.push({ from: prev + 1, to: next - 1 });
      }
    }
    return out;
  }

  hasGaps(): boolean {
    return this.gaps().length > 0;
  }

  // -- session metadata, as last reported by GET /session

  get session(): SessionInfo | null {
    return this.#session;
  }

  setSession(info: SessionInfo): void {
    this.#session = info;
  }

  // -- pending command acknowledgements

  addAck(ack: ControlAck): void {
    if (ack.applies_at_epoch > this.lastEpoch()) {
      this.#acks.push(ack);
    }
  }

  /** Commands acknowledged by the service but not yet visible in a record. */
  pendingAcks(): readonly ControlAck[] {
    return this.#acks;
  }

  clear(): void {
    this.#records = [];
    this.#acks = [];
    this.#session = null;
  }

  // binary search for the insertion point of `epoch`
  #indexFor(epoch: number): number {
    let lo = 0;
    let hi = this.#records.length;
    while (lo < hi) {
      const mid = (lo + hi) >>> 1;
      if (this.#records[mid]!.epoch < epoch) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    return lo;
  }
}
