/** One palette per concept, reused across every view. */

export const PERIOD_COLORS = ["#4c78a8", "#f58518", "#54a24b", "#b279a2", "#e45756"];

export const TIER_COLORS: Record<string, string> = {
  primary: "#4c78a8",
  secondary: "#f58518",
  tertiary: "#54a24b",
};

export const FIRST_SNAPSHOT = "#d62728";
export const LAST_SNAPSHOT = "#1f77b4";

export const POSITIVE_BAR = "#e45756";
export const NEGATIVE_BAR = "#4c78a8";

export const HIGHLIGHT = "#b8860b";

export function periodColor(periodIdx: number): string {
  return PERIOD_COLORS[periodIdx % PERIOD_COLORS.length];
}

/** Month ramp for the projection scatter, teal to plum over the timeline. */
export function rampColor(t: number): string {
  const from = [26, 152, 160];
  const to = [130, 60, 140];
  const mix = from.map((c, i) => Math.round(c + (to[i] - c) * t));
  return `rgb(${mix[0]}, ${mix[1]}, ${mix[2]})`;
}
