import type { ProjectionPayload } from "../types.js";
import { extent, linearScale, type Viewport } from "./scale.js";

export interface PlacedMonth {
  month: string;
  order_index: number;
  n_active: number;
  x: number;
  y: number;
  /** Chronological fraction in [0, 1] driving the colour ramp. */
  t: number;
}

export interface ProjectionView {
  points: PlacedMonth[];
  /** SVG points attribute for the chronological curve. */
  polyline: string;
  first: PlacedMonth;
  last: PlacedMonth;
  settings: { perplexity: number; n_iter: number; seed: number };
  kl_divergence: number;
}

/**
 * Place the embedded snapshots in the viewport. Points come back in
 * chronological order regardless of payload order, with the first and last
 * month exposed for endpoint emphasis.
 */
export function projectionView(payload: ProjectionPayload, viewport: Viewport): ProjectionView {
  if (payload.points.length === 0) {
    throw new Error("projection payload has no points");
  }
  const ordered = [...payload.points].sort((a, b) => a.order_index - b.order_index);
  const [xLo, xHi] = extent(ordered.map((p) => p.x));
  const [yLo, yHi] = extent(ordered.map((p) => p.y));
  const sx = linearScale(xLo, xHi, viewport.margin, viewport.width - viewport.margin);
  const sy = linearScale(yLo, yHi, viewport.height - viewport.margin, viewport.margin);
  const denom = Math.max(ordered.length - 1, 1);
  const points = ordered.map((p, i) => ({
    month: p.month,
    order_index: p.order_index,
    n_active: p.n_active,
    x: sx(p.x),
    y: sy(p.y),
    t: i / denom,
  }));
  return {
    points,
    polyline: points.map((p) => `${p.x},${p.y}`).join(" "),
    first: points[0],
    last: points[points.length - 1],
    settings: payload.settings,
    kl_divergence: payload.kl_divergence,
  };
}

export type Polygon = Array<[number, number]>;

/** Even-odd ray cast; polygons with fewer than three vertices contain nothing. */
export function pointInPolygon(x: number, y: number, polygon: Polygon): boolean {
  if (polygon.length < 3) {
    return false;
  }
  let inside = false;
  for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i, i += 1) {
    const [xi, yi] = polygon[i];
    const [xj, yj] = polygon[j];
    const crosses = yi > y !== yj > y && x < ((xj - xi) * (y - yi)) / (yj - yi) + xi;
    if (crosses) {
      inside = !inside;
    }
  }
  return inside;
}

/** Months whose placed points fall inside the lasso, in chronological order. */
export function lassoMonths(view: ProjectionView, polygon: Polygon): string[] {
  return view.points.filter((p) => pointInPolygon(p.x, p.y, polygon)).map((p) => p.month);
}

export function monthIndex(month: string): number {
  const match = /^(\d{4})-(\d{2})$/.exec(month);
  if (!match) {
    throw new Error(`bad month ${month}`);
  }
  return Number(match[1]) * 12 + (Number(match[2]) - 1);
}

export interface MonthRange {
  from: string;
  to: string;
  /** Calendar months covered by [from, to] inclusive. */
  span: number;
}

/** Bounding range of a month selection, or null when nothing is selected. */
export function monthRange(months: string[]): MonthRange | null {
  if (months.length === 0) {
    return null;
  }
  let from = months[0];
  let to = months[0];
  for (const month of months) {
    if (monthIndex(month) < monthIndex(from)) from = month;
    if (monthIndex(month) > monthIndex(to)) to = month;
  }
  return { from, to, span: monthIndex(to) - monthIndex(from) + 1 };
}
