import { cloudView, type ScaleKind } from "./chart.js";
import { DashboardClient, type ConnectionStatus } from "./dashboard.js";

// Browser entry point: binds one DashboardClient to the static page in
// index.html. All logic lives in the imported modules; this file only
// moves values into DOM attributes.

const REGION_COLORS: Record<string, string> = {
  red: "#c0392b",
  yellow: "#b7950b",
  green: "#1e8449",
};

function serviceUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("service");
  return fromQuery ?? "http://127.0.0.1:8787";
}

export function initDashboard(): DashboardClient {
  const badge = document.getElementById("region-badge") as HTMLSpanElement;
  const status = document.getElementById("conn-status") as HTMLSpanElement;
  const epochLabel = document.getElementById("epoch-label") as HTMLSpanElement;
  const lossLabel = document.getElementById("loss-label") as HTMLSpanElement;
  const acksLabel = document.getElementById("pending-acks") as HTMLSpanElement;
  const toasts = document.getElementById("toasts") as HTMLDivElement;
  const scaleToggle = document.getElementById("scale-linear") as HTMLInputElement;
  const lrInput = document.getElementById("lr-input") as HTMLInputElement;

  const shapes = {
    regionRed: document.getElementById("region-red") as unknown as SVGPolygonElement,
    regionYellow: document.getElementById("region-yellow") as unknown as SVGPolygonElement,
    regionGreen: document.getElementById("region-green") as unknown as SVGPolygonElement,
    loss: document.getElementById("loss-line") as unknown as SVGPolylineElement,
    yes0: document.getElementById("yes0-line") as unknown as SVGPolylineElement,
    yesBest: document.getElementById("yes-best-line") as unknown as SVGPolylineElement,
  };

  let renderQueued = false;

  const client = new DashboardClient(serviceUrl(), {
    handlers: {
      onRecord: () => scheduleRender(),
      onStatus: (s) => showStatus(s),
      onToast: (message) => showToast(message),
      onAck: (ack) => {
        showToast(`${ack.kind} applies at epoch ${ack.applies_at_epoch}`);
        scheduleRender();
      },
      onStopped: (event) => {
        showToast(`run ended: ${event.reason}`);
        scheduleRender();
      },
    },
  });

  function scheduleRender(): void {
    if (renderQueued) return;
    renderQueued = true;
    requestAnimationFrame(() => {
      renderQueued = false;
      render();
    });
  }

  function render(): void {
    const records = client.view.records();
    const preferred: ScaleKind = scaleToggle.checked ? "linear" : "log";
    const view = cloudView(records, { preferredScale: preferred });

    shapes.loss.setAttribute("points", view.loss);
    shapes.yes0.setAttribute("points", view.yes0 ?? "");
    shapes.yesBest.setAttribute("points", view.yesBest ?? "");
    shapes.regionRed.setAttribute("points", view.regionRed ?? "");
    shapes.regionYellow.setAttribute("points", view.regionYellow ?? "");
    shapes.regionGreen.setAttribute("points", view.regionGreen ?? "");

    const latest = client.view.latest();
    const region = client.view.regionBadge();
    badge.textContent = region ?? "-";
    badge.style.backgroundColor = region === null ? "#888" : REGION_COLORS[region]!;
    epochLabel.textContent = latest === null ? "-" : String(latest.epoch);
    lossLabel.textContent =
      latest === null || latest.loss === null ? "-" : latest.loss.toExponential(4);
    const pending = client.view.pendingAcks();
    acksLabel.textContent =
      pending.length === 0
        ? ""
        : pending.map((a) => `${a.kind}@${a.applies_at_epoch}`).join(", ");
  }

  function showStatus(s: ConnectionStatus): void {
    status.textContent = s;
    status.className = `status status-${s}`;
    if (s === "final" && client.stopReason !== null) {
      status.textContent = `final (${client.stopReason})`;
    }
  }

  function showToast(message: string): void {
    const node = document.createElement("div");
    node.className = "toast";
    node.textContent = message;
    toasts.appendChild(node);
    setTimeout(() => node.remove(), 6000);
  }

  function wireButton(id: string, action: () => void): void {
    (document.getElementById(id) as HTMLButtonElement).addEventListener("click", action);
  }

  wireButton("btn-pause", () => void client.pause());
  wireButton("btn-resume", () => void client.resume());
  wireButton("btn-stop", () => void client.stop());
  wireButton("btn-set-lr", () => void client.setLearningRate(Number(lrInput.value)));
  const guidance = document.getElementById("guidance-toggle") as HTMLInputElement;
  guidance.addEventListener("change", () => void client.toggleGuidance(guidance.checked));
  scaleToggle.addEventListener("change", () => scheduleRender());

  void client.connect();
  return client;
}

if (typeof document !== "undefined" && document.getElementById("region-badge") !== null) {
  initDashboard();
}
