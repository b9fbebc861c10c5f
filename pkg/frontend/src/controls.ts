import type { ControlAck, ControlCommand, ErrorBody } from "./types.js";

/**
 * A control the service refused, or one blocked before sending.
 * `status` is the HTTP status, or 0 when client-side validation blocked
 * the request without a round trip.
 */
export class ControlRejectedError extends Error {
  readonly status: number;
  readonly field: string | undefined;

  constructor(status: number, field: string | undefined, message: string) {
    super(message);
    this.name = "ControlRejectedError";
    this.status = status;
    this.field = field;
  }
}

// Mirrors the server-side rules so malformed input never leaves the
// client. Returns null when the command is acceptable.
export function validateControl(command: ControlCommand): string | null {
  switch (command.kind) {
    case "set_learning_rate":
      if (typeof command.value !== "number" || !Number.isFinite(command.value)) {
        return `learning rate must be a finite number, got ${command.value}`;
      }
      if (command.value <= 0) {
        return `learning rate must be > 0, got ${command.value}`;
      }
      return null;
    case "toggle_guidance":
      return typeof command.enabled === "boolean" ? null : "enabled must be a boolean";
    case "pause":
    case "resume":
    case "stop":
      return null;
  }
}

export async function sendControl(
  baseUrl: string,
  command: ControlCommand,
  fetchFn: typeof fetch = fetch,
): Promise<ControlAck> {
  const problem = validateControl(command);
  if (problem !== null) {
    throw new ControlRejectedError(0, undefined, problem);
  }
  const response = await fetchFn(`${baseUrl}/control`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(command),
  });
  const body: unknown = await response.json();
  if (!response.ok) {
    const error = (body as ErrorBody).error ?? {
      message: `control failed: HTTP ${response.status}`,
    };
    throw new ControlRejectedError(response.status, error.field, error.message);
  }
  return body as ControlAck;
}
