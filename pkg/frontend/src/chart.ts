import type { EpochRecord } from "./types.js";

// Pure view-model math for the cloud chart: scales, step interpolation
// between cadence epochs, and downsampling so a 10k-epoch run still
// renders as a short polyline. No DOM access here; app code feeds the
// returned attribute strings into svg elements.

export type ScaleKind = "log" | "linear";

export interface Pair {
  epoch: number;
  value: number;
}

export interface ChartFrame {
  width: number;
  height: number;
  marginLeft: number;
  marginRight: number;
  marginTop: number;
  marginBottom: number;
}

export const DEFAULT_FRAME: ChartFrame = {
  width: 720,
  height: 420,
  marginLeft: 56,
  marginRight: 16,
  marginTop: 16,
  marginBottom: 36,
};

export const DEFAULT_MAX_POINTS = 2000;

/** Log scale only works when every plotted value is positive. */
export function chooseScale(values: number[], preferred: ScaleKind): ScaleKind {
  if (preferred === "log" && values.length > 0 && values.every((v) => v > 0)) {
    return "log";
  }
  return "linear";
}

/**
 * Map a data value onto a pixel coordinate. `pxLo` is where `lo` lands,
 * so passing pxLo > pxHi gives the usual inverted y axis.
 */
export function mapper(
  kind: ScaleKind,
  lo: number,
  hi: number,
  pxLo: number,
  pxHi: number,
): (value: number) => number {
  const transform = kind === "log" ? Math.log10 : (v: number) => v;
  const a = transform(lo);
  const b = transform(hi);
  const span = b - a;
  if (span === 0) {
    const mid = (pxLo + pxHi) / 2;
    return () => mid;
  }
  return (value) => pxLo + ((transform(value) - a) / span) * (pxHi - pxLo);
}

/** Hold each value forward until the next change; close at lastEpoch. */
export function stepPoints(pairs: Pair[], lastEpoch: number): Pair[] {
  const out: Pair[] = [];
  for (let i = 0; i < pairs.length; i++) {
    const { epoch, value } = pairs[i]!;
    if (i > 0) {
      out.push({ epoch, value: pairs[i - 1]!.value });
    }
    out.push({ epoch, value });
  }
  const last = pairs[pairs.length - 1];
  if (last !== undefined && last.epoch < lastEpoch) {
    out.push({ epoch: lastEpoch, value: last.value });
  }
  return out;
}

/**
 * Bucketed min/max downsampling: keeps the first and last points and the
 * extremes of each bucket, so spikes survive while the point count stays
 * bounded by roughly 2x the bucket count.
 */
export function downsample(pairs: Pair[], maxPoints: number): Pair[] {
  if (maxPoints < 4) {
    throw new RangeError(`maxPoints must be >= 4, got ${maxPoints}`);
  }
  if (pairs.length <= maxPoints) {
    return pairs;
  }
  const buckets = Math.floor((maxPoints - 2) / 2);
  const inner = pairs.slice(1, -1);
  const per = inner.length / buckets;
  const out: Pair[] = [pairs[0]!];
  for (let b = 0; b < buckets; b++) {
    const start = Math.floor(b * per);
    const end = Math.min(Math.floor((b + 1) * per), inner.length);
    if (start >= end) continue;
    let minAt = start;
    let maxAt = start;
    for (let i = start + 1; i < end; i++) {
      if (inner[i]!.value < inner[minAt]!.value) minAt = i;
      if (inner[i]!.value > inner[maxAt]!.value) maxAt = i;
    }
    const first = Math.min(minAt, maxAt);
    const second = Math.max(minAt, maxAt);
    out.push(inner[first]!);
    if (second !== first) out.push(inner[second]!);
  }
  out.push(pairs[pairs.length - 1]!);
  return out;
}

export function lossPairs(records: readonly EpochRecord[]): Pair[] {
  const out: Pair[] = [];
  for (const r of records) {
    if (r.loss !== null && Number.isFinite(r.loss)) {
      out.push({ epoch: r.epoch, value: r.loss });
    }
  }
  return out;
}

export interface BoundPairs {
  yes0: Pair[];
  top: Pair[];
  bottom: Pair[];
}

/** Measured bound values at cadence epochs; off-cadence records carry null. */
export function boundPairs(records: readonly EpochRecord[]): BoundPairs {
  const yes0: Pair[] = [];
  const top: Pair[] = [];
  const bottom: Pair[] = [];
  for (const r of records) {
    if (r.bounds === null) continue;
    yes0.push({ epoch: r.epoch, value: r.bounds.yes0 });
    top.push({ epoch: r.epoch, value: r.bounds.cloud_top });
    bottom.push({ epoch: r.epoch, value: r.bounds.cloud_bottom });
  }
  return { yes0, top, bottom };
}

function fmt(px: number): string {
  return px.toFixed(2);
}

export function pointsAttr(
  pairs: Pair[],
  sx: (epoch: number) => number,
  sy: (value: number) => number,
): string {
  return pairs.map((p) => `${fmt(sx(p.epoch))},${fmt(sy(p.value))}`).join(" ");
}

export interface CloudView {
  scale: ScaleKind;
  loss: string;
  yes0: string | null;
  yesBest: string | null;
  regionRed: string | null;
  regionYellow: string | null;
  regionGreen: string | null;
  note: string | null;
}

export interface CloudViewOptions {
  frame?: ChartFrame;
  preferredScale?: ScaleKind;
  maxPoints?: number;
}

/**
 * Assemble every attribute string the chart needs from raw records. Bound
 * edges use step interpolation (a bound holds until recomputed); regions
 * are the areas above the top edge, between the edges, and below the
 * bottom edge, matching the carried-forward region semantics.
 */
export function cloudView(
  records: readonly EpochRecord[],
  options: CloudViewOptions = {},
): CloudView {
  const frame = options.frame ?? DEFAULT_FRAME;
  const maxPoints = options.maxPoints ?? DEFAULT_MAX_POINTS;
  const loss = lossPairs(records);
  const bounds = boundPairs(records);

  const empty: CloudView = {
    scale: "linear",
    loss: "",
    yes0: null,
    yesBest: null,
    regionRed: null,
    regionYellow: null,
    regionGreen: null,
    note: loss.length === 0 ? "no data yet" : null,
  };
  if (loss.length === 0) {
    return empty;
  }

  const values = [
    ...loss.map((p) => p.value),
    ...bounds.yes0.map((p) => p.value),
    ...bounds.bottom.map((p) => p.value),
  ];
  const scale = chooseScale(values, options.preferredScale ?? "log");

  const lastEpoch = loss[loss.length - 1]!.epoch;
  const sx = mapper(
    "linear",
    loss[0]!.epoch,
    lastEpoch,
    frame.marginLeft,
    frame.width - frame.marginRight,
  );
  const sy = mapper(
    scale,
    Math.min(...values),
    Math.max(...values),
    frame.height - frame.marginBottom,
    frame.marginTop,
  );

  const view: CloudView = { ...empty, scale, loss: pointsAttr(downsample(loss, maxPoints), sx, sy) };

  if (bounds.yes0.length === 0) {
    view.note = "no bounds yet";
    return view;
  }

  const topSteps = stepPoints(downsample(bounds.top, maxPoints), lastEpoch);
  const botSteps = stepPoints(downsample(bounds.bottom, maxPoints), lastEpoch);
  view.yes0 = pointsAttr(stepPoints(downsample(bounds.yes0, maxPoints), lastEpoch), sx, sy);
  view.yesBest = pointsAttr(botSteps, sx, sy);

  const xLo = fmt(sx(topSteps[0]!.epoch));
  const xHi = fmt(sx(lastEpoch));
  const topAttr = pointsAttr(topSteps, sx, sy);
  const botAttr = pointsAttr(botSteps, sx, sy);
  const reverse = (attr: string) => attr.split(" ").reverse().join(" ");

  view.regionRed = `${xLo},${fmt(frame.marginTop)} ${xHi},${fmt(frame.marginTop)} ${reverse(topAttr)}`;
  view.regionYellow = `${topAttr} ${reverse(botAttr)}`;
  const floor = fmt(frame.height - frame.marginBottom);
  view.regionGreen = `${botAttr} ${xHi},${floor} ${xLo},${floor}`;
  return view;
}
