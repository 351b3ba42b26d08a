import type { ClusterDetailsPayload, ClustersPayload, PathsPayload } from "../types.js";
import { extent, linearScale, type Viewport } from "./scale.js";

export interface Glyph {
  id: string;
  periodIdx: number;
  period: [number, number];
  size: number;
  lon: number;
  lat: number;
  cx: number;
  cy: number;
  r: number;
  /** True when the collision pass moved the glyph off its true position. */
  offset: boolean;
}

export interface Hull {
  periodIdx: number;
  points: string;
}

export interface PathCurve {
  path_id: string;
  points: string;
}

export interface SpatialView {
  glyphs: Glyph[];
  hulls: Hull[];
  curves: PathCurve[];
}

const R_MIN = 8;
const R_MAX = 26;
const COLLISION_PAD = 2;

function convexHull(points: Array<[number, number]>): Array<[number, number]> {
  // Andrew's monotone chain; returns the input for degenerate sets.
  if (points.length < 3) {
    return points;
  }
  const sorted = [...points].sort((a, b) => a[0] - b[0] || a[1] - b[1]);
  const cross = (o: [number, number], a: [number, number], b: [number, number]) =>
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  const lower: Array<[number, number]> = [];
  for (const p of sorted) {
    while (lower.length >= 2 && cross(lower[lower.length - 2], lower[lower.length - 1], p) <= 0) {
      lower.pop();
    }
    lower.push(p);
  }
  const upper: Array<[number, number]> = [];
  for (const p of [...sorted].reverse()) {
    while (upper.length >= 2 && cross(upper[upper.length - 2], upper[upper.length - 1], p) <= 0) {
      upper.pop();
    }
    upper.push(p);
  }
  lower.pop();
  upper.pop();
  return [...lower, ...upper];
}

/**
 * Glyph map over a plain coordinate plane. Radii grow with the square root of
 * cluster size so area tracks member count; overlapping glyphs are nudged
 * apart deterministically and flagged so the renderer can ring them.
 */
export function spatialView(
  clusters: ClustersPayload,
  paths: PathsPayload,
  viewport: Viewport,
): SpatialView {
  const entries = clusters.periods.flatMap((period, periodIdx) =>
    period.clusters.map((cluster) => ({ period, periodIdx, cluster })),
  );
  if (entries.length === 0) {
    return { glyphs: [], hulls: [], curves: [] };
  }
  const [lonLo, lonHi] = extent(entries.map((e) => e.cluster.centroid[0]));
  const [latLo, latHi] = extent(entries.map((e) => e.cluster.centroid[1]));
  const pad = viewport.margin + R_MAX;
  const sx = linearScale(lonLo, lonHi, pad, viewport.width - pad);
  const sy = linearScale(latLo, latHi, viewport.height - pad, pad);
  const maxSize = Math.max(...entries.map((e) => e.cluster.size), 1);

  const glyphs: Glyph[] = entries.map(({ period, periodIdx, cluster }) => ({
    id: cluster.id,
    periodIdx,
    period: period.period,
    size: cluster.size,
    lon: cluster.centroid[0],
    lat: cluster.centroid[1],
    cx: sx(cluster.centroid[0]),
    cy: sy(cluster.centroid[1]),
    r: R_MIN + (R_MAX - R_MIN) * Math.sqrt(cluster.size / maxSize),
    offset: false,
  }));

  resolveCollisions(glyphs);

  const hulls: Hull[] = [];
  for (let periodIdx = 0; periodIdx < clusters.periods.length; periodIdx += 1) {
    const members = glyphs.filter((g) => g.periodIdx === periodIdx);
    if (members.length === 0) {
      continue;
    }
    const samples: Array<[number, number]> = [];
    for (const glyph of members) {
      for (let k = 0; k < 12; k += 1) {
        const angle = (2 * Math.PI * k) / 12;
        samples.push([
          glyph.cx + (glyph.r + 4) * Math.cos(angle),
          glyph.cy + (glyph.r + 4) * Math.sin(angle),
        ]);
      }
    }
    const hull = convexHull(samples);
    hulls.push({
      periodIdx,
      points: hull.map(([x, y]) => `${x.toFixed(1)},${y.toFixed(1)}`).join(" "),
    });
  }

  const byId = new Map(glyphs.map((g) => [g.id, g]));
  const curves: PathCurve[] = paths.paths.map((path) => ({
    path_id: path.path_id,
    points: path.cluster_ids
      .map((id) => byId.get(id))
      .filter((g): g is Glyph => g !== undefined)
      .map((g) => `${g.cx},${g.cy}`)
      .join(" "),
  }));

  return { glyphs, hulls, curves };
}

function resolveCollisions(glyphs: Glyph[]): void {
  // Largest glyphs keep their spot; later ones step away from whatever they
  // overlap until clear. Deterministic, no randomness.
  const placed: Glyph[] = [];
  const order = [...glyphs].sort((a, b) => b.size - a.size || a.id.localeCompare(b.id));
  for (const glyph of order) {
    for (let attempt = 0; attempt < 60; attempt += 1) {
      const hit = placed.find(
        (other) => Math.hypot(glyph.cx - other.cx, glyph.cy - other.cy) < glyph.r + other.r + COLLISION_PAD,
      );
      if (!hit) {
        break;
      }
      let dx = glyph.cx - hit.cx;
      let dy = glyph.cy - hit.cy;
      const dist = Math.hypot(dx, dy);
      if (dist === 0) {
        dx = 1;
        dy = 0;
      } else {
        dx /= dist;
        dy /= dist;
      }
      const need = glyph.r + hit.r + COLLISION_PAD - dist;
      glyph.cx += dx * (need + 1);
      glyph.cy += dy * (need + 1);
      glyph.offset = true;
    }
    placed.push(glyph);
  }
}

export interface DetailPanel {
  clusterId: string;
  periodLabel: string;
  months: string[];
  tierCounts: Array<{ tier: string; count: number }>;
  codeCounts: Array<{ code: string; count: number }>;
  registrationTotal: number[];
  registrationByTier: number[][];
  livability: Array<{ month: string; livability: number; mortality: number }>;
  heat: { bbox: number[]; shape: [number, number]; cells: number[][]; maxCell: number };
}

/** Details bundle arranged for display; every number comes straight from the payload. */
export function detailPanel(details: ClusterDetailsPayload): DetailPanel {
  const months = details.months;
  let maxCell = 0;
  for (const row of details.heat_grid.cells) {
    for (const cell of row) {
      if (cell > maxCell) maxCell = cell;
    }
  }
  return {
    clusterId: details.cluster_id,
    periodLabel: `${months[0]} to ${months[months.length - 1]}`,
    months,
    tierCounts: Object.entries(details.histogram.tiers).map(([tier, count]) => ({ tier, count })),
    codeCounts: Object.entries(details.histogram.codes)
      .sort((a, b) => b[1] - a[1])
      .map(([code, count]) => ({ code, count })),
    registrationTotal: details.registration.total,
    registrationByTier: details.registration.by_tier,
    livability: details.livability,
    heat: {
      bbox: details.heat_grid.bbox,
      shape: details.heat_grid.shape,
      cells: details.heat_grid.cells,
      maxCell,
    },
  };
}
