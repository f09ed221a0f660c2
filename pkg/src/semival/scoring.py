"""Model scores ``V``: regression losses, classification rates and net benefit.

A :class:`ScoreMetric` optionally clips the raw score to ``[lo, hi]`` and
then applies a registered strictly increasing transform.  Transform ids are
stable strings so they can round-trip through run configs:

``identity``
    ``x``
``neg-sqrt``
    ``-sqrt(-x)``; turns negative MSE into negative RMSE.  Defined for ``x <= 0``.
``signed-log``
    ``sign(x) * log(1 + |x|)``
``affine:<a>:<b>``
    ``a * x + b`` with ``a > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .data import Dataset
from .errors import ConfigError, DomainError
from .learners import Model

KINDS = ("neg-mse", "neg-rmse", "accuracy", "tpr", "fpr", "net-benefit")
CLASSIFICATION_KINDS = ("accuracy", "tpr", "fpr", "net-benefit")


def _neg_sqrt(x):
    x = np.asarray(x, dtype=float)
    if np.any(x > 0):
        raise DomainError("neg-sqrt transform is only defined for nonpositive scores")
    return -np.sqrt(-x)


def _signed_log(x):
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.log1p(np.abs(x))


_TRANSFORMS: dict[str, Callable] = {
    "identity": lambda x: np.asarray(x, dtype=float),
    "neg-sqrt": _neg_sqrt,
    "signed-log": _signed_log,
}


def get_transform(transform_id: str) -> Callable[[np.ndarray], np.ndarray]:
    """Resolve a transform id to a vectorized callable."""
    if transform_id in _TRANSFORMS:
        return _TRANSFORMS[transform_id]
    if transform_id.startswith("affine:"):
        try:
            _, a, b = transform_id.split(":")
            a, b = float(a), float(b)
        except ValueError:
            raise ConfigError(f"malformed affine transform id {transform_id!r}") from None
        if not a > 0:
            raise ConfigError(f"affine transform needs a > 0, got {a}")
        return lambda x: a * np.asarray(x, dtype=float) + b
    raise ConfigError(f"unknown transform id {transform_id!r}")


def affine_id(a: float, b: float) -> str:
    return f"affine:{a!r}:{b!r}"


def net_benefit(tpr: float, fpr: float, p_t: float) -> float:
    """``tpr - p_t / (1 - p_t) * fpr``."""
    if not 0.0 < p_t < 1.0:
        raise DomainError(f"net benefit needs p_t in (0, 1), got {p_t}")
    return tpr - (p_t / (1.0 - p_t)) * fpr


def clip(score: float, lo: float, hi: float) -> float:
    return min(hi, max(lo, score))


@dataclass(frozen=True)
class ScoreMetric:
    kind: str = "neg-mse"
    p_t: float | None = None
    transform: str = "identity"
    clip: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown metric kind {self.kind!r}")
        if self.kind == "net-benefit":
            if self.p_t is None or not 0.0 < self.p_t < 1.0:
                raise DomainError(f"net-benefit needs p_t in (0, 1), got {self.p_t}")
        get_transform(self.transform)
        if self.clip is not None:
            lo, hi = self.clip
            if not lo < hi:
                raise ConfigError(f"clip bounds need lo < hi, got {self.clip}")
            object.__setattr__(self, "clip", (float(lo), float(hi)))

    @property
    def classification(self) -> bool:
        return self.kind in CLASSIFICATION_KINDS

    def with_transform(self, transform_id: str) -> "ScoreMetric":
        return ScoreMetric(self.kind, self.p_t, transform_id, self.clip)

    def __str__(self) -> str:
        s = self.kind
        if self.p_t is not None:
            s += f"(p_t={self.p_t!r})"
        if self.transform != "identity":
            s = f"{self.transform}({s})"
        if self.clip is not None:
            s += f"[clip={self.clip[0]!r},{self.clip[1]!r}]"
        return s


def rates(labels: np.ndarray, y: np.ndarray, metric: str = "tpr") -> tuple[float, float]:
    """True and false positive rates of hard ``labels`` against ``y``."""
    pos = y == 1.0
    n_pos = int(np.count_nonzero(pos))
    n_neg = len(y) - n_pos
    if n_pos == 0 and metric in ("tpr", "net-benefit"):
        raise DomainError(f"{metric} is undefined: the test set has no positives")
    if n_neg == 0 and metric in ("fpr", "net-benefit"):
        raise DomainError(f"{metric} is undefined: the test set has no negatives")
    hits = labels.astype(bool)
    tp = int(np.count_nonzero(hits & pos))
    fp = int(np.count_nonzero(hits)) - tp
    tpr = tp / n_pos if n_pos else float("nan")
    fpr = fp / n_neg if n_neg else float("nan")
    return tpr, fpr


def raw_score(kind: str, predictions: np.ndarray, test: Dataset, p_t: float | None = None) -> float:
    """Unclipped, untransformed score from test-set predictions.

    ``predictions`` are real values for regression kinds and class-1
    probabilities for classification kinds.
    """
    y = test.y
    if kind in ("neg-mse", "neg-rmse"):
        mse = float(np.mean((predictions - y) ** 2))
        return -mse if kind == "neg-mse" else -math.sqrt(mse)
    if not np.all((y == 0.0) | (y == 1.0)):
        raise DomainError(f"{kind} needs binary test labels")
    labels = (predictions > 0.5).astype(float)
    if kind == "accuracy":
        return float(np.mean(labels == y))
    tpr, fpr = rates(labels, y, kind)
    if kind == "tpr":
        return tpr
    if kind == "fpr":
        return fpr
    return net_benefit(tpr, fpr, p_t)


def finish(metric: ScoreMetric, value: float) -> float:
    """Apply the metric's clip and then its transform to a raw score."""
    if metric.clip is not None:
        value = clip(value, *metric.clip)
    if metric.transform != "identity":
        value = float(get_transform(metric.transform)(value))
    return value


def score(metric: ScoreMetric, model: Model, test: Dataset) -> float:
    """Score ``model`` on ``test`` under ``metric``."""
    if model.weights is not None and len(model.weights) != test.feature_dim:
        raise DomainError(
            f"model has {len(model.weights)} weights but the test set has {test.feature_dim} features"
        )
    return finish(metric, raw_score(metric.kind, model.predict(test.X), test, metric.p_t))


def naive_mse(test: Dataset) -> float:
    """MSE of the untrained regression baseline, which predicts 0."""
    return float(np.mean(test.y**2))


def default_regression_clip(test: Dataset, multiple: float = 4.0) -> tuple[float, float]:
    """``[-multiple * naive_mse, 0]``: scores worse than a fixed multiple of the baseline are floored."""
    return (-multiple * naive_mse(test), 0.0)
