import type { ClustersPayload, EvolutionPathPayload, PathEdge, PathsPayload } from "../types.js";
import type { Viewport } from "./scale.js";

export interface EvolutionNode {
  id: string;
  periodIdx: number;
  period: [number, number];
  size: number;
  /** Zero-based rank within the period after sorting by size, largest first. */
  rank: number;
  x: number;
  y: number;
  width: number;
  height: number;
}

export interface EvolutionRow {
  periodIdx: number;
  period: [number, number];
  label: string;
  nodes: EvolutionNode[];
}

export interface EvolutionEdge {
  from: string;
  to: string;
  overlap: number;
  shiftKm: number;
  /** Annotation string passed through from the API verbatim. */
  label: string;
  /** Mini-axis fills in [0, 1], scaled against the level maxima. */
  countBar: number;
  shiftBar: number;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  merge: boolean;
}

export interface EvolutionView {
  rows: EvolutionRow[];
  edges: EvolutionEdge[];
  caption: string;
}

const NODE_HEIGHT = 22;
const NODE_GAP = 10;
const MIN_NODE_WIDTH = 14;

/**
 * Ranked per-period rows with lineage edges between them. Transfer counts and
 * centroid shifts have no common unit, so each edge carries two separately
 * scaled mini-axis fills instead of one fused scale.
 */
export function evolutionView(
  clusters: ClustersPayload,
  paths: PathsPayload,
  viewport: Viewport,
): EvolutionView {
  const inner = viewport.width - 2 * viewport.margin;
  const nPeriods = clusters.periods.length;
  const rowStep = nPeriods > 0 ? (viewport.height - 2 * viewport.margin) / nPeriods : 0;

  const rows: EvolutionRow[] = [];
  const nodeById = new Map<string, EvolutionNode>();
  clusters.periods.forEach((period, periodIdx) => {
    const ranked = [...period.clusters].sort((a, b) => b.size - a.size);
    const total = ranked.reduce((sum, c) => sum + c.size, 0);
    const gaps = NODE_GAP * Math.max(ranked.length - 1, 0);
    const usable = Math.max(inner - gaps, MIN_NODE_WIDTH);
    const y = viewport.margin + rowStep * periodIdx + rowStep / 2;
    let x = viewport.margin;
    const nodes = ranked.map((cluster, rank) => {
      const width = total > 0 ? Math.max((cluster.size / total) * usable, MIN_NODE_WIDTH) : MIN_NODE_WIDTH;
      const node: EvolutionNode = {
        id: cluster.id,
        periodIdx,
        period: period.period,
        size: cluster.size,
        rank,
        x,
        y: y - NODE_HEIGHT / 2,
        width,
        height: NODE_HEIGHT,
      };
      x += width + NODE_GAP;
      nodeById.set(cluster.id, node);
      return node;
    });
    rows.push({
      periodIdx,
      period: period.period,
      label: `${period.months[0]} to ${period.months[1]}`,
      nodes,
    });
  });

  const edges: EvolutionEdge[] = [];
  paths.edges.forEach((level) => {
    const maxOverlap = Math.max(...level.map((e) => e.overlap), 1);
    const maxShift = Math.max(...level.map((e) => e.centroid_shift_km), 0);
    const inbound = new Map<string, number>();
    for (const edge of level) {
      inbound.set(edge.to_cluster, (inbound.get(edge.to_cluster) ?? 0) + 1);
    }
    for (const edge of level) {
      const from = nodeById.get(edge.from_cluster);
      const to = nodeById.get(edge.to_cluster);
      if (!from || !to) {
        continue;
      }
      edges.push({
        from: edge.from_cluster,
        to: edge.to_cluster,
        overlap: edge.overlap,
        shiftKm: edge.centroid_shift_km,
        label: edge.label,
        countBar: edge.overlap / maxOverlap,
        shiftBar: maxShift > 0 ? edge.centroid_shift_km / maxShift : 0,
        x1: from.x + from.width / 2,
        y1: from.y + from.height,
        x2: to.x + to.width / 2,
        y2: to.y,
        merge: (inbound.get(edge.to_cluster) ?? 0) >= 2,
      });
    }
  });

  return {
    rows,
    edges,
    caption: "edges: enterprises transferred / centroid shift (km), drawn on separate mini scales",
  };
}

export function isMergeEdge(level: PathEdge[], edge: PathEdge): boolean {
  return level.filter((e) => e.to_cluster === edge.to_cluster).length >= 2;
}

/** Ids of all paths whose chain visits the cluster. */
export function pathsThroughCluster(paths: PathsPayload, clusterId: string): string[] {
  return paths.paths.filter((p) => p.cluster_ids.includes(clusterId)).map((p) => p.path_id);
}

/**
 * Paths to light up when an edge is clicked: everything flowing into the
 * edge's destination, so a merge edge highlights each incoming path.
 */
export function edgeHighlight(
  paths: PathsPayload,
  edge: Pick<PathEdge, "to_cluster">,
): string[] {
  return pathsThroughCluster(paths, edge.to_cluster);
}

export function pathById(paths: PathsPayload, pathId: string): EvolutionPathPayload | null {
  return paths.paths.find((p) => p.path_id === pathId) ?? null;
}
