/** Response shapes for the `/api/v1` endpoints, mirrored field for field. */

export interface ProjectionPoint {
  month: string;
  x: number;
  y: number;
  n_active: number;
  order_index: number;
}

export interface ProjectionPayload {
  points: ProjectionPoint[];
  kl_divergence: number;
  settings: { perplexity: number; n_iter: number; seed: number };
}

export interface SnapshotItem {
  month: string;
  total: number;
  counts: number[];
  features: number[];
}

export interface ForecastPointPayload {
  month: string;
  actual: number | null;
  predicted: number;
  base_value: number;
  attributions: number[];
}

export interface FitAuditPayload {
  eval_start: string;
  train_through: string;
  n_pairs: number;
}

export interface ImportanceBar {
  magnitudes: number[];
  signs: number[];
}

export interface ForecastResult {
  tier: string;
  model: string;
  mape: { percentage: number | null; n_scored: number; n_skipped: number };
  points: ForecastPointPayload[];
  audits: FitAuditPayload[];
  bars: ImportanceBar[];
}

export interface ForecastPayload {
  feature_names: string[];
  window: number;
  results: ForecastResult[];
}

export interface SnapshotsPayload {
  from: string;
  to: string;
  snapshots: SnapshotItem[];
  forecast: Array<{ tier: string; model: string; points: ForecastPointPayload[] }>;
}

export interface SegmentPayload {
  start_idx: number;
  end_idx: number;
  start_month: string;
  end_month: string;
  length: number;
  slope: number;
  intercept: number;
  max_residual: number;
  residuals: number[];
}

export interface SegmentsPayload {
  series: string;
  n_months: number;
  threshold: Record<string, unknown>;
  segments: SegmentPayload[];
  periods: SegmentPayload[];
}

export interface ClusterEntry {
  id: string;
  size: number;
  centroid: [number, number];
  member_ids: string[];
}

export interface ClusterPeriod {
  period: [number, number];
  months: [string, string];
  n_points: number;
  noise_count: number;
  stable: boolean;
  params: { eps_km: number; min_pts: number };
  clusters: ClusterEntry[];
}

export interface ClustersPayload {
  periods: ClusterPeriod[];
}

export interface PathEdge {
  from_cluster: string;
  to_cluster: string;
  overlap: number;
  centroid_shift_km: number;
  label: string;
}

export interface EvolutionPathPayload {
  path_id: string;
  cluster_ids: string[];
  periods: Array<[number, number]>;
}

export interface PathsPayload {
  edges: PathEdge[][];
  paths: EvolutionPathPayload[];
}

export interface ClusterDetailsPayload {
  cluster_id: string;
  period: [number, number];
  months: string[];
  histogram: { tiers: Record<string, number>; codes: Record<string, number> };
  registration: { total: number[]; by_tier: number[][] };
  livability: Array<{ month: string; livability: number; mortality: number }>;
  heat_grid: { bbox: number[]; shape: [number, number]; cells: number[][] };
}

export interface RingSlice {
  band_km: [number, number];
  count: number;
  indicators: Record<string, number> | null;
}

export interface CompareCluster {
  id: string;
  period: [number, number];
  indicators: Record<string, number>;
  aligned: Record<string, number>;
  rings: { remainder_count: number; slices: RingSlice[] };
}

export interface ComparePayload {
  ids: string[];
  fields: string[];
  bounds: { low: number[]; high: number[] };
  clusters: CompareCluster[];
}

export interface ManifestPayload {
  kind: string;
  dataset_id: string;
  created_at: string;
  config: Record<string, unknown>;
  config_hash: string;
  store_hash: string;
  detail_ids: string[];
  artifacts: Record<string, { kind: string; path: string; hash: string }>;
}

export interface ErrorBody {
  code: string;
  message: string;
}
