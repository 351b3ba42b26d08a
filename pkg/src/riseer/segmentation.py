"""Top-down piecewise-linear segmentation of the monthly series.

A segment is scored by the largest absolute residual of its least-squares
line; a split is chosen to minimize the sum of the two children's scores.
Recursion stops once every segment is under the caller's error budget or too
short to split.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted, column_or_1d

from .errors import DegenerateDataset, UnsplittableSegment


@dataclass(frozen=True)
class Segment:
    """A maximal linear stretch of the series, indexed inclusively."""

    start_idx: int
    end_idx: int
    slope: float
    intercept: float
    max_residual: float

    @property
    def length(self) -> int:
        return self.end_idx - self.start_idx + 1

    @property
    def fit(self) -> tuple[float, float]:
        return (self.slope, self.intercept)

    def value_at(self, idx: int) -> float:
        return self.slope * idx + self.intercept


def segment_error(series, lo: int, hi: int) -> tuple[tuple[float, float], float]:
    """Least-squares line over absolute indices lo..hi and its largest residual."""
    if lo > hi:
        raise ValueError(f"inverted segment bounds: {lo}..{hi}")
    ys = np.asarray(series, dtype=float)[lo:hi + 1]
    if len(ys) == 1:
        return (0.0, float(ys[0])), 0.0
    xs = np.arange(lo, hi + 1, dtype=float)
    xc = xs - xs.mean()
    slope = float((xc * ys).sum() / (xc * xc).sum())
    intercept = float(ys.mean() - slope * xs.mean())
    residual = float(np.abs(ys - (slope * xs + intercept)).max())
    return (slope, intercept), residual


def best_split(series, lo: int, hi: int) -> int:
    """Split index s with children lo..s and s+1..hi of smallest summed error.

    Candidates run from lo+1 to hi-1; ties go to the smallest index, which
    keeps the whole segmentation deterministic.
    """
    if hi - lo < 2:
        raise UnsplittableSegment(f"segment {lo}..{hi} has no admissible split")
    best_s, best_err = -1, np.inf
    for s in range(lo + 1, hi):
        err = segment_error(series, lo, s)[1] + segment_error(series, s + 1, hi)[1]
        if err < best_err - 1e-12:
            best_s, best_err = s, err
    return best_s


def _make_segment(series, lo: int, hi: int) -> Segment:
    (slope, intercept), residual = segment_error(series, lo, hi)
    return Segment(lo, hi, slope, intercept, residual)


def topdown_segment(series, max_error: float) -> list[Segment]:
    """Recursively split until every segment fits within max_error.

    Segments of one or two points are terminal regardless of error; a
    two-point line is already exact, so this only matters for noise far
    above the threshold.
    """
    if max_error <= 0:
        raise ValueError(f"max_error must be positive, got {max_error}")
    values = np.asarray(series, dtype=float)
    if values.size == 0:
        raise DegenerateDataset("cannot segment an empty series")

    out: list[Segment] = []
    stack = [(0, len(values) - 1)]
    while stack:
        lo, hi = stack.pop()
        seg = _make_segment(values, lo, hi)
        if seg.max_residual <= max_error or seg.length <= 2:
            out.append(seg)
            continue
        s = best_split(values, lo, hi)
        stack.append((s + 1, hi))
        stack.append((lo, s))
    out.sort(key=lambda g: g.start_idx)
    return out


def resolve_threshold(series, threshold: float, mode: str = "fraction") -> float:
    """Turn a threshold setting into an absolute error budget.

    Fractional thresholds scale with the series range so one default works
    across regions of very different size.
    """
    if mode == "absolute":
        return float(threshold)
    if mode != "fraction":
        raise ValueError(f"unknown threshold mode: {mode!r}")
    values = np.asarray(series, dtype=float)
    span = float(values.max() - values.min()) if values.size else 0.0
    return max(float(threshold) * span, 1e-12)


def parse_threshold_spec(text: str) -> tuple[float, str]:
    """CLI grammar: a bare number is a fraction; 'abs:<v>' and 'frac:<v>' are explicit."""
    text = text.strip()
    if text.startswith("abs:"):
        return float(text[4:]), "absolute"
    if text.startswith("frac:"):
        return float(text[5:]), "fraction"
    try:
        return float(text), "fraction"
    except ValueError:
        raise ValueError(
            f"bad threshold {text!r}: use a bare fraction, frac:<v>, or abs:<v>"
        ) from None


def merge_slivers(series, segments: list[Segment], min_length: int = 6) -> list[Segment]:
    """Fold segments shorter than min_length into a neighbor, refitting the union.

    The leftmost sliver merges into its left neighbor (or right when it is
    first); repeats until no sliver remains or one segment is left.
    """
    segs = list(segments)
    while len(segs) > 1:
        idx = next((i for i, s in enumerate(segs) if s.length < min_length), None)
        if idx is None:
            break
        j = idx - 1 if idx > 0 else idx + 1
        a, b = segs[min(idx, j)], segs[max(idx, j)]
        merged = _make_segment(series, a.start_idx, b.end_idx)
        segs[min(idx, j):max(idx, j) + 1] = [merged]
    return segs


def select_periods(
    series, segments: list[Segment], k: int = 5, min_length: int = 6
) -> list[Segment]:
    """The k longest segments after sliver merging, in chronological order."""
    merged = merge_slivers(series, segments, min_length=min_length)
    ranked = sorted(merged, key=lambda s: (-s.length, s.start_idx))
    chosen = ranked[:k]
    return sorted(chosen, key=lambda s: s.start_idx)


class TopDownSegmenter(BaseEstimator):
    """Segment a 1-d series into piecewise-linear stretches.

    Parameters
    ----------
    threshold : float, default 0.05
        Error budget; a fraction of the series range unless mode is
        'absolute'.
    mode : {'fraction', 'absolute'}, default 'fraction'

    Attributes
    ----------
    segments_ : list of Segment
    labels_ : ndarray, segment index per input point
    threshold_ : resolved absolute error budget
    """

    def __init__(self, threshold: float = 0.05, mode: str = "fraction"):
        self.threshold = threshold
        self.mode = mode

    def fit(self, X, y=None):
        series = column_or_1d(np.asarray(X, dtype=float))
        self.threshold_ = resolve_threshold(series, self.threshold, self.mode)
        self.segments_ = topdown_segment(series, self.threshold_)
        self.labels_ = np.repeat(
            np.arange(len(self.segments_)), [s.length for s in self.segments_]
        )
        self.n_segments_ = len(self.segments_)
        return self

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).labels_

    def predict_series(self, X) -> np.ndarray:
        """Piecewise-linear reconstruction of the fitted series."""
        check_is_fitted(self, "segments_")
        out = np.empty(sum(s.length for s in self.segments_))
        for seg in self.segments_:
            idx = np.arange(seg.start_idx, seg.end_idx + 1)
            out[idx] = seg.slope * idx + seg.intercept
        return out
