import type { ComparePayload } from "../types.js";

export interface RadarAxis {
  field: string;
  angle: number;
  labelX: number;
  labelY: number;
}

export interface RadarVertex {
  field: string;
  /** Raw indicator value from the API, shown in the tooltip. */
  value: number;
  /** Normalized position in [0, 1] from the API, sets the radius. */
  aligned: number;
  x: number;
  y: number;
}

export interface RadarRing {
  band: [number, number];
  count: number;
  r: number;
}

export interface RadarOverlay {
  id: string;
  vertices: RadarVertex[];
  polygon: string;
  rings: RadarRing[];
  remainder: number;
}

export interface ComparisonView {
  axes: RadarAxis[];
  overlays: RadarOverlay[];
  /** Set when fewer than two clusters are selected; overlays are empty then. */
  guidance: string | null;
}

export const GUIDANCE =
  "Select two or three clusters in the evolution or spatial view to compare them here.";

/**
 * Ringed radar overlays from a compare response. Vertex radii use the aligned
 * values as-is, so identical selections produce identical polygons; the rings
 * mark the distance bands with their member counts.
 */
export function comparisonView(
  payload: ComparePayload | null,
  radius: number,
  cx = 0,
  cy = 0,
): ComparisonView {
  if (payload === null || payload.clusters.length < 2) {
    return { axes: [], overlays: [], guidance: GUIDANCE };
  }
  const fields = payload.fields;
  const axes: RadarAxis[] = fields.map((field, i) => {
    const angle = (2 * Math.PI * i) / fields.length - Math.PI / 2;
    return {
      field,
      angle,
      labelX: cx + (radius + 16) * Math.cos(angle),
      labelY: cy + (radius + 16) * Math.sin(angle),
    };
  });

  const overlays: RadarOverlay[] = payload.clusters.map((cluster) => {
    const vertices: RadarVertex[] = axes.map((axis) => {
      const aligned = cluster.aligned[axis.field];
      return {
        field: axis.field,
        value: cluster.indicators[axis.field],
        aligned,
        x: cx + radius * aligned * Math.cos(axis.angle),
        y: cy + radius * aligned * Math.sin(axis.angle),
      };
    });
    const bands = cluster.rings.slices.map((s) => s.band_km[1]);
    const outer = bands.length > 0 ? bands[bands.length - 1] : 1;
    const rings: RadarRing[] = cluster.rings.slices.map((slice) => ({
      band: slice.band_km,
      count: slice.count,
      r: (slice.band_km[1] / outer) * radius,
    }));
    return {
      id: cluster.id,
      vertices,
      polygon: vertices.map((v) => `${v.x},${v.y}`).join(" "),
      rings,
      remainder: cluster.rings.remainder_count,
    };
  });

  return { axes, overlays, guidance: null };
}
