"""Monthly snapshot vectors and their 2-D embedding for the overview plot.

Each month becomes a vector of categorical histograms plus two capital
summaries; the whole series is then laid out by an exact t-SNE. At a few
hundred months the quadratic variant is cheap and avoids approximation
artifacts entirely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .errors import DegenerateDataset
from .ingest import RecordTable, Vocabularies, _interval_sums, _slot_month_counts
from .records import EnterpriseRecord, Month

HISTOGRAM_FIELDS = ("classification_code", "property", "state", "credit_rating")
CAPITAL_SUMMARIES = ("capital:log_mean", "capital:log_total")


def vector_labels(vocabs: Vocabularies) -> tuple[str, ...]:
    """Component names of the snapshot vector, in storage order."""
    labels = [
        f"{field}:{label}"
        for field in HISTOGRAM_FIELDS
        for label in vocabs.for_field(field).labels
    ]
    return tuple(labels) + CAPITAL_SUMMARIES


def snapshot_matrix(
    table: RecordTable, vocabs: Vocabularies, span: tuple[Month, Month]
) -> tuple[np.ndarray, np.ndarray]:
    """(months x components) vectors for a span, plus active counts per month.

    Months with no active records get all-zero rows; the returned counts let
    callers flag those explicitly.
    """
    lo, n_months = span[0].index, span[1].index - span[0].index + 1
    totals = _interval_sums(table.start, table.end, lo, n_months)
    blocks = []
    for field in HISTOGRAM_FIELDS:
        counts = _slot_month_counts(table, field, lo, n_months)
        with np.errstate(invalid="ignore", divide="ignore"):
            blocks.append((counts / np.maximum(totals, 1.0)).T)
    capital_sum = _interval_sums(table.start, table.end, lo, n_months, table.capital)
    with np.errstate(invalid="ignore", divide="ignore"):
        log_mean = np.where(
            totals > 0, np.log10(1.0 + capital_sum / np.maximum(totals, 1.0)), 0.0
        )
    log_total = np.log10(1.0 + capital_sum)
    blocks.append(np.stack([log_mean, log_total], axis=1))
    return np.hstack(blocks), totals.astype(int)


def snapshot_vector(
    records: list[EnterpriseRecord], month: Month, vocabs: Vocabularies
) -> tuple[np.ndarray, int]:
    """Single-month vector built by direct scan; the bulk path must agree."""
    table = RecordTable([r for r in records if r.active_in(month)], vocabs)
    matrix, counts = snapshot_matrix(table, vocabs, (month, month))
    return matrix[0], int(counts[0])


def standardize(X: np.ndarray) -> np.ndarray:
    """Z-score each column; constant columns go to zero instead of blowing up."""
    X = np.asarray(X, dtype=float)
    std = X.std(axis=0)
    return (X - X.mean(axis=0)) / np.where(std > 0, std, 1.0)


def _conditional_probabilities(
    sq_distances: np.ndarray, perplexity: float, tol: float = 1e-4, max_iter: int = 100
) -> np.ndarray:
    """Per-row Gaussian affinities whose entropy matches log(perplexity).

    Bandwidths come from bisection on the precision; entropies land within
    ``tol`` nats of the target. Rows sum to 1 with a zero diagonal.
    """
    n = len(sq_distances)
    target = np.log(perplexity)
    P = np.zeros_like(sq_distances)
    for i in range(n):
        d = np.delete(sq_distances[i], i)
        d = d - d.min()  # shift-invariant, keeps the exponentials in range
        beta, beta_lo, beta_hi = 1.0, 0.0, np.inf
        for _ in range(max_iter):
            expd = np.exp(-d * beta)
            sum_e = expd.sum()
            entropy = np.log(sum_e) + beta * float(np.dot(d, expd)) / sum_e
            if abs(entropy - target) <= tol:
                break
            if entropy > target:
                beta_lo = beta
                beta = beta * 2.0 if beta_hi == np.inf else (beta + beta_hi) / 2.0
            else:
                beta_hi = beta
                beta = (beta + beta_lo) / 2.0
        row = expd / sum_e
        P[i, :i] = row[:i]
        P[i, i + 1:] = row[i:]
    return P


def joint_probabilities(X: np.ndarray, perplexity: float) -> np.ndarray:
    sq = np.square(X[:, None, :] - X[None, :, :]).sum(-1)
    cond = _conditional_probabilities(sq, perplexity)
    P = (cond + cond.T) / (2.0 * len(X))
    return np.maximum(P, 1e-12)


class ExactTSNE(BaseEstimator):
    """Full-matrix t-SNE with early exaggeration, momentum, and gain updates."""

    def __init__(self, perplexity=30.0, n_iter=1000, learning_rate=None,
                 early_exaggeration=12.0, exaggeration_iters=250, seed=0):
        self.perplexity = perplexity
        self.n_iter = n_iter
        self.learning_rate = learning_rate
        self.early_exaggeration = early_exaggeration
        self.exaggeration_iters = exaggeration_iters
        self.seed = seed

    def fit_transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        n = len(X)
        if n < 3:
            raise DegenerateDataset(f"cannot embed {n} points, need at least 3")
        if not self.perplexity < n / 3:
            raise ValueError(
                f"perplexity {self.perplexity} must be below n/3 = {n / 3:.1f}"
            )
        P = joint_probabilities(X, self.perplexity)
        lr = self.learning_rate if self.learning_rate is not None else n / 12.0
        rng = np.random.default_rng(self.seed)
        Y = rng.normal(0.0, 1e-4, size=(n, 2))
        update = np.zeros_like(Y)
        gains = np.ones_like(Y)
        kl_history = []
        for it in range(self.n_iter):
            exaggeration = (
                self.early_exaggeration if it < self.exaggeration_iters else 1.0
            )
            sq = np.square(Y[:, None, :] - Y[None, :, :]).sum(-1)
            kernel = 1.0 / (1.0 + sq)
            np.fill_diagonal(kernel, 0.0)
            Q = np.maximum(kernel / kernel.sum(), 1e-12)
            weights = (exaggeration * P - Q) * kernel
            grad = 4.0 * (np.diag(weights.sum(axis=1)) - weights) @ Y
            momentum = 0.5 if it < 250 else 0.8
            flipped = np.sign(grad) != np.sign(update)
            gains = np.where(flipped, gains + 0.2, gains * 0.8)
            gains = np.maximum(gains, 0.01)
            update = momentum * update - lr * gains * grad
            Y = Y + update
            Y = Y - Y.mean(axis=0)
            kl_history.append(float(np.sum(P * np.log(P / Q))))
        self.embedding_ = Y
        self.kl_history_ = kl_history
        self.kl_divergence_ = kl_history[-1] if kl_history else float("nan")
        return Y


@dataclass(frozen=True)
class ProjectionPoint:
    """One embedded snapshot, ranked chronologically."""

    month: Month
    xy: tuple[float, float]
    order_index: int
    n_active: int = 0


def tsne_fit(
    months: list[Month],
    vectors: np.ndarray,
    perplexity: float = 30.0,
    seed: int = 0,
    iters: int = 1000,
    active_counts=None,
) -> tuple[list[ProjectionPoint], ExactTSNE]:
    """Embed the standardized vectors; returns the fitted model for its KL trace."""
    if len(months) != len(vectors):
        raise ValueError("months and vectors must align")
    order = np.argsort([m.index for m in months])
    model = ExactTSNE(perplexity=perplexity, n_iter=iters, seed=seed)
    layout = model.fit_transform(standardize(np.asarray(vectors)))
    counts = active_counts if active_counts is not None else [0] * len(months)
    points = [
        ProjectionPoint(
            month=months[src],
            xy=(float(layout[src, 0]), float(layout[src, 1])),
            order_index=rank,
            n_active=int(counts[src]),
        )
        for rank, src in enumerate(order)
    ]
    return points, model


def tsne_embed(
    months: list[Month],
    vectors: np.ndarray,
    perplexity: float = 30.0,
    seed: int = 0,
    iters: int = 1000,
    active_counts=None,
) -> list[ProjectionPoint]:
    """Embed the standardized vectors and attach months in time order."""
    return tsne_fit(months, vectors, perplexity, seed, iters, active_counts)[0]


@dataclass(frozen=True)
class Chronology:
    """Embedded points in time order with the endpoints called out."""

    months: tuple[Month, ...]
    polyline: tuple[tuple[float, float], ...]
    first: Month
    last: Month

    @property
    def n_segments(self) -> int:
        return max(0, len(self.polyline) - 1)


def chronology(points: list[ProjectionPoint]) -> Chronology:
    if not points:
        raise DegenerateDataset("no points to connect")
    ordered = sorted(points, key=lambda p: p.month)
    return Chronology(
        months=tuple(p.month for p in ordered),
        polyline=tuple(p.xy for p in ordered),
        first=ordered[0].month,
        last=ordered[-1].month,
    )
