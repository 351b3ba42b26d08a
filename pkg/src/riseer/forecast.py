"""Expanding-window single-step forecasting of per-tier registration counts.

Each evaluation year gets a model fit on every month strictly before it, so
no prediction ever sees its own year's data. Inputs are flattened windows of
the monthly feature vectors plus the tier's count history; attributions come
out of the tree walk per predicted month and are folded back onto the seven
feature dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientHistory, MapeUndefined
from .ingest import FEATURE_NAMES, MonthlySnapshot, count_series
from .records import Month
from .trees import GradientBoostedTrees, NaiveLast, RandomForest
from .treeshap import shap_matrix

MODELS = ("RandomForest", "GradientBoostedTrees", "NaiveLast")
MODEL_ALIASES = {"rf": "RandomForest", "gbt": "GradientBoostedTrees",
                 "naive": "NaiveLast"}


@dataclass(frozen=True)
class ForecastConfig:
    """Window length, model choice, and tree hyperparameters."""

    model: str = "GradientBoostedTrees"
    window: int = 12
    trees: int = 100
    depth: int = 3
    learning_rate: float = 0.1
    subsample: float = 1.0
    seed: int = 0
    initial_train_months: int = 132
    refit: str = "yearly"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}, expected one of {MODELS}")
        if self.window < 1:
            raise ValueError("window must be at least 1")
        if self.trees < 1 or self.depth < 1:
            raise ValueError("tree count and depth must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError("subsample must be in (0, 1]")
        if self.initial_train_months < self.window + 1:
            raise ValueError("initial training span shorter than one window")
        if self.refit not in ("yearly", "monthly"):
            raise ValueError("refit must be 'yearly' or 'monthly'")


@dataclass(frozen=True)
class ForecastPoint:
    """One evaluated month with its additive explanation."""

    month: Month
    tier: str
    actual: float
    predicted: float
    base_value: float
    attributions: tuple[float, ...]


@dataclass(frozen=True)
class FitAudit:
    """Training extent of one refit, kept for leakage checks."""

    eval_start: Month
    train_through: Month
    n_pairs: int


@dataclass(frozen=True)
class ForecastResult:
    tier: str
    model: str
    points: tuple[ForecastPoint, ...]
    audits: tuple[FitAudit, ...]


@dataclass(frozen=True)
class MapeScore:
    percentage: float
    n_scored: int
    n_skipped: int


@dataclass(frozen=True)
class ImportanceBar:
    """L1-normalized attribution magnitudes with their signs, fixed order."""

    feature_names: tuple[str, ...]
    magnitudes: tuple[float, ...]
    signs: tuple[int, ...]

    @property
    def is_empty(self) -> bool:
        return not any(self.magnitudes)


def make_supervised(
    snapshots: list[MonthlySnapshot], tier: str, window: int
) -> tuple[np.ndarray, np.ndarray, list[Month]]:
    """Sliding windows over the series: one (input, target) pair per month.

    The input concatenates the window's feature vectors with the tier's
    count history; the target is the count one month later. Returns the
    target months alongside so callers can place each pair in time.
    """
    if len(snapshots) < window + 1:
        raise InsufficientHistory(
            f"need at least {window + 1} months, got {len(snapshots)}"
        )
    feats = np.stack([s.model_features for s in snapshots])
    counts = count_series(snapshots, f"tier:{tier}")
    inputs, targets, months = [], [], []
    for end in range(window - 1, len(snapshots) - 1):
        lo = end - window + 1
        inputs.append(np.concatenate([feats[lo:end + 1].ravel(), counts[lo:end + 1]]))
        targets.append(counts[end + 1])
        months.append(snapshots[end + 1].month)
    return np.stack(inputs), np.array(targets), months


def build_model(config: ForecastConfig):
    if config.model == "RandomForest":
        return RandomForest(
            n_estimators=config.trees,
            max_depth=config.depth,
            random_state=config.seed,
        )
    if config.model == "GradientBoostedTrees":
        return GradientBoostedTrees(
            n_estimators=config.trees,
            learning_rate=config.learning_rate,
            max_depth=config.depth,
            subsample=config.subsample,
            random_state=config.seed,
        )
    return NaiveLast()


def fold_attributions(
    base: float, phi: np.ndarray, window: int
) -> tuple[float, tuple[float, ...]]:
    """Collapse window-position attributions onto the feature dimensions.

    The count-history share has no feature axis to land on, so it joins the
    base value; additivity against the prediction is untouched.
    """
    d = len(FEATURE_NAMES)
    per_feature = phi[: d * window].reshape(window, d).sum(axis=0)
    count_share = float(phi[d * window:].sum())
    return base + count_share, tuple(float(v) for v in per_feature)


def expanding_window_forecast(
    snapshots: list[MonthlySnapshot], tier: str, config: ForecastConfig
) -> ForecastResult:
    X, y, target_months = make_supervised(snapshots, tier, config.window)
    first_eval = snapshots[0].month.plus(config.initial_train_months)
    if first_eval > target_months[-1]:
        raise InsufficientHistory(
            f"first evaluation month {first_eval} is past the series end"
        )

    def boundary(m: Month) -> Month:
        if config.refit == "monthly":
            return m
        return max(first_eval, Month(m.year, 1))

    blocks: dict[Month, list[int]] = {}
    for pos, m in enumerate(target_months):
        if m >= first_eval:
            blocks.setdefault(boundary(m), []).append(pos)

    points, audits = [], []
    for start, positions in sorted(blocks.items()):
        n_train = int(np.searchsorted([m.index for m in target_months], start.index))
        model = build_model(config).fit(X[:n_train], y[:n_train])
        audits.append(FitAudit(start, start.plus(-1), n_train))
        rows = X[positions]
        predicted = model.predict(rows)
        bases, phi = shap_matrix(model, rows)
        for k, pos in enumerate(positions):
            base, attr = fold_attributions(float(bases[k]), phi[k], config.window)
            points.append(
                ForecastPoint(
                    month=target_months[pos],
                    tier=tier,
                    actual=float(y[pos]),
                    predicted=float(predicted[k]),
                    base_value=base,
                    attributions=attr,
                )
            )
    return ForecastResult(tier, config.model, tuple(points), tuple(audits))


def mape(points) -> MapeScore:
    """Mean absolute percentage error, skipping zero-actual months."""
    scored = [p for p in points if p.actual != 0]
    skipped = len(points) - len(scored)
    if not scored:
        raise MapeUndefined("every actual is zero, the percentage error has no base")
    pct = 100.0 * float(
        np.mean([abs(p.actual - p.predicted) / abs(p.actual) for p in scored])
    )
    return MapeScore(pct, len(scored), skipped)


def importance_bars(point: ForecastPoint) -> ImportanceBar:
    """Per-feature shares of the explanation, signs preserved."""
    phi = np.asarray(point.attributions)
    total = np.abs(phi).sum()
    if total == 0:
        magnitudes = tuple(0.0 for _ in phi)
    else:
        magnitudes = tuple(float(v) for v in np.abs(phi) / total)
    signs = tuple(int(np.sign(v)) for v in phi)
    return ImportanceBar(FEATURE_NAMES, magnitudes, signs)
