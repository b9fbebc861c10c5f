// Wire types for the monitor service HTTP/JSON contract. The dashboard
// holds no training state of its own: everything it shows comes from
// these shapes, field for field.

export type Region = "red" | "yellow" | "green";

export interface YesBounds {
  yes0: number;
  yes_k: Record<string, number>;
  cloud_top: number;
  cloud_bottom: number;
  best_checkpoints: number[];
}

export interface RunEvent {
  kind: string;
  [extra: string]: unknown;
}

export interface EpochRecord {
  type: "epoch";
  epoch: number;
  /** null on the wire when the value went non-finite (diverged run) */
  loss: number | null;
  lr: number;
  weight_change: number | null;
  region: Region;
  /** true when bounds were carried forward instead of recomputed this epoch */
  region_stale: boolean;
  guidance: boolean;
  bounds: YesBounds | null;
  events: RunEvent[];
  wall_time_ms: number;
}

export interface StoppedEvent {
  type: "stopped";
  reason: string; // max_epochs | control | stop_rule | diverged | error
}

export type StreamEvent = EpochRecord | StoppedEvent;

export interface SessionInfo {
  status: string;
  epoch: number;
  reason: string | null;
  config: Record<string, unknown>;
}

export type ControlCommand =
  | { kind: "pause" }
  | { kind: "resume" }
  | { kind: "stop" }
  | { kind: "set_learning_rate"; value: number }
  | { kind: "toggle_guidance"; enabled: boolean };

export interface ControlAck {
  accepted: true;
  kind: string;
  applies_at_epoch: number;
}

export interface ErrorBody {
  error: { field?: string; message: string };
}
