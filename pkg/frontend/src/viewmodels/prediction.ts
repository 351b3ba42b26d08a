import type { ForecastPayload, ForecastResult } from "../types.js";
import { extent, linearScale, type Viewport } from "./scale.js";

export const KNOWN_MODELS = ["GradientBoostedTrees", "RandomForest", "NaiveLast"] as const;

export interface ModelOption {
  model: string;
  available: boolean;
}

/** Switcher entries: the full roster with absent models left disabled. */
export function modelOptions(payload: ForecastPayload): ModelOption[] {
  const present = new Set(payload.results.map((r) => r.model));
  return KNOWN_MODELS.map((model) => ({ model, available: present.has(model) }));
}

export function tiersIn(payload: ForecastPayload): string[] {
  const seen: string[] = [];
  for (const result of payload.results) {
    if (!seen.includes(result.tier)) {
      seen.push(result.tier);
    }
  }
  return seen;
}

export function resultFor(
  payload: ForecastPayload,
  tier: string,
  model: string,
): ForecastResult | null {
  return payload.results.find((r) => r.tier === tier && r.model === model) ?? null;
}

export interface ChartPoint {
  month: string;
  value: number;
  x: number;
  y: number;
  highlighted: boolean;
}

export interface BarSegment {
  feature: string;
  magnitude: number;
  sign: number;
  y0: number;
  y1: number;
}

export interface AttributionColumn {
  month: string;
  x: number;
  markY: number;
  predicted: number;
  segments: BarSegment[];
  highlighted: boolean;
}

export interface TierChart {
  tier: string;
  model: string;
  actual: ChartPoint[];
  predicted: ChartPoint[];
  columns: AttributionColumn[];
  mapeLabel: string;
}

/**
 * One tier's chart: the ground-truth series (drawn dashed), the model series
 * (drawn solid), and a signed importance stack per month. Positive features
 * stack downward from the prediction mark, negative ones upward, with segment
 * heights proportional to the normalized magnitudes reported by the API.
 */
export function tierChart(
  result: ForecastResult,
  featureNames: string[],
  viewport: Viewport,
  selectedMonths: ReadonlySet<string> = new Set(),
  barBudget = 36,
): TierChart {
  const months = result.points.map((p) => p.month);
  const actuals = result.points.filter((p) => p.actual !== null).map((p) => p.actual as number);
  const predictions = result.points.map((p) => p.predicted);
  const [lo, hi] = extent([...actuals, ...predictions]);
  const sx = linearScale(0, Math.max(months.length - 1, 1), viewport.margin, viewport.width - viewport.margin);
  // Leave the bar budget free on both sides so stacks stay inside the frame.
  const sy = linearScale(lo, hi, viewport.height - viewport.margin - barBudget, viewport.margin + barBudget);

  const actual: ChartPoint[] = [];
  const predicted: ChartPoint[] = [];
  const columns: AttributionColumn[] = [];
  result.points.forEach((point, i) => {
    const x = sx(i);
    const highlighted = selectedMonths.has(point.month);
    if (point.actual !== null) {
      actual.push({ month: point.month, value: point.actual, x, y: sy(point.actual), highlighted });
    }
    const markY = sy(point.predicted);
    predicted.push({ month: point.month, value: point.predicted, x, y: markY, highlighted });

    const bar = result.bars[i];
    const segments: BarSegment[] = [];
    let below = markY;
    let above = markY;
    bar.magnitudes.forEach((magnitude, f) => {
      if (magnitude <= 0) {
        return;
      }
      const sign = bar.signs[f];
      const height = magnitude * barBudget;
      if (sign >= 0) {
        segments.push({ feature: featureNames[f], magnitude, sign, y0: below, y1: below + height });
        below += height;
      } else {
        segments.push({ feature: featureNames[f], magnitude, sign, y0: above - height, y1: above });
        above -= height;
      }
    });
    columns.push({ month: point.month, x, markY, predicted: point.predicted, segments, highlighted });
  });

  const mape = result.mape;
  const mapeLabel =
    mape.percentage === null
      ? "MAPE unavailable"
      : `MAPE ${mape.percentage.toFixed(1)}% over ${mape.n_scored} months`;
  return { tier: result.tier, model: result.model, actual, predicted, columns, mapeLabel };
}
