/** Shared plotting helpers for the view builders. */

export interface Viewport {
  width: number;
  height: number;
  margin: number;
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const value of values) {
    if (value < lo) lo = value;
    if (value > hi) hi = value;
  }
  if (lo > hi) {
    return [0, 1];
  }
  return [lo, hi];
}

/** Affine map from a data interval onto pixels; degenerate domains pin to the range midpoint. */
export function linearScale(
  domainLo: number,
  domainHi: number,
  rangeLo: number,
  rangeHi: number,
): (value: number) => number {
  const span = domainHi - domainLo;
  if (span === 0) {
    const mid = (rangeLo + rangeHi) / 2;
    return () => mid;
  }
  const factor = (rangeHi - rangeLo) / span;
  return (value) => rangeLo + (value - domainLo) * factor;
}

export function formatNumber(value: number): string {
  if (Number.isInteger(value)) {
    return String(value);
  }
  return value.toFixed(2);
}
