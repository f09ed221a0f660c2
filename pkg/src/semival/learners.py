"""Deterministic learning algorithms mapping coalitions to models.

Every learner here is a frozen, hashable value so it can key a model cache.
Training is fully deterministic: ridge uses a closed-form solve and logistic
regression runs a fixed number of full-batch gradient steps from zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .data import Coalition, Dataset, cardinality, members
from .errors import ConfigError, DomainError, NumericError


@dataclass(frozen=True, eq=False)
class Model:
    """A fitted linear model, or the untrained baseline when ``kind == "untrained"``.

    ``predict`` returns real predictions for regression and class-1
    probabilities for classification.
    """

    kind: str
    task: str
    weights: np.ndarray | None = None
    intercept: float = 0.0

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.kind == "untrained":
            return np.full(X.shape[0], 0.5 if self.task == "classification" else 0.0)
        z = X @ self.weights + self.intercept
        if self.task == "classification":
            return _sigmoid(z)
        return z

    def predict_label(self, X: np.ndarray) -> np.ndarray:
        """Hard labels at threshold 0.5; a probability of exactly 0.5 maps to class 0."""
        return (self.predict(X) > 0.5).astype(float)


def untrained_model(task: str) -> Model:
    return Model(kind="untrained", task=task)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def train_ridge(S: Coalition, data: Dataset, lam: float) -> Model:
    """Ridge regression with an unpenalized intercept.

    Solves ``(Xc^T Xc + lam I) w = Xc^T yc`` on the mean-centered rows of
    the coalition and sets ``intercept = mean(y) - mean(X) @ w``.
    """
    if lam < 0:
        raise DomainError(f"ridge penalty must be nonnegative, got {lam}")
    idx = members(S)
    if len(idx) == 0:
        raise DomainError("ridge cannot train on the empty coalition; use the untrained fallback")
    X, y = data.X[idx], data.y[idx]
    x_mean, y_mean = X.mean(axis=0), y.mean()
    Xc, yc = X - x_mean, y - y_mean
    A = Xc.T @ Xc + lam * np.eye(X.shape[1])
    try:
        w = np.linalg.solve(A, Xc.T @ yc)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"singular ridge system on |S|={len(idx)} with lambda={lam}") from exc
    if not np.all(np.isfinite(w)):
        raise NumericError(f"non-finite ridge weights on |S|={len(idx)} with lambda={lam}")
    return Model(kind="ridge", task="regression", weights=w, intercept=float(y_mean - x_mean @ w))


def train_logistic(S: Coalition, data: Dataset, steps: int, lr: float, l2: float) -> Model:
    """Full-batch gradient descent on the mean log-loss plus ``l2/2 * |w|^2``.

    Starts from zero weights and zero intercept and runs exactly ``steps``
    updates; the intercept is not penalized.
    """
    if steps < 0 or lr <= 0 or l2 < 0:
        raise DomainError("logistic regression needs steps >= 0, lr > 0, l2 >= 0")
    idx = members(S)
    if len(idx) == 0:
        raise DomainError("logistic regression cannot train on the empty coalition")
    X, y = data.X[idx], data.y[idx]
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise DomainError("logistic regression needs labels in {0, 1}")
    m = len(idx)
    w = np.zeros(X.shape[1])
    b = 0.0
    for _ in range(steps):
        r = _sigmoid(X @ w + b) - y
        w = w - lr * (X.T @ r / m + l2 * w)
        b = b - lr * (r.sum() / m)
    if not (np.all(np.isfinite(w)) and np.isfinite(b)):
        raise NumericError("logistic regression diverged; lower the learning rate")
    return Model(kind="logistic", task="classification", weights=w, intercept=float(b))


@dataclass(frozen=True)
class Ridge:
    lam: float = 1.0
    task = "regression"

    def fit(self, S: Coalition, data: Dataset) -> Model:
        return train_ridge(S, data, self.lam)

    def __str__(self) -> str:
        return f"ridge(lam={self.lam:g})"


@dataclass(frozen=True)
class Logistic:
    steps: int = 200
    lr: float = 0.5
    l2: float = 0.01
    task = "classification"

    def fit(self, S: Coalition, data: Dataset) -> Model:
        return train_logistic(S, data, self.steps, self.lr, self.l2)

    def __str__(self) -> str:
        return f"logistic(steps={self.steps},lr={self.lr:g},l2={self.l2:g})"


@dataclass(frozen=True)
class Untrained:
    """Behavior option that always returns the untrained baseline."""

    task: str = "regression"

    def fit(self, S: Coalition, data: Dataset) -> Model:
        return untrained_model(self.task)

    def __str__(self) -> str:
        return "untrained"


BaseLearner = Union[Ridge, Logistic, Untrained]


@dataclass(frozen=True)
class BehaviorTable:
    """Per-cardinality behavior options for coalitions smaller than ``k_star``.

    ``options[k]`` lists the admissible learners for size-``k`` coalitions
    and ``selected[k]`` picks one.  Entry ``k = 0`` may be empty because the
    empty coalition always yields the untrained model.
    """

    k_star: int
    options: tuple[tuple[BaseLearner, ...], ...]
    selected: tuple[int, ...]

    def __post_init__(self):
        if len(self.options) != self.k_star or len(self.selected) != self.k_star:
            raise ConfigError(
                f"behavior table needs one option list and one selection per k < {self.k_star}"
            )
        for k in range(1, self.k_star):
            if not self.options[k]:
                raise ConfigError(f"behavior table has no option for cardinality {k}")
            if not 0 <= self.selected[k] < len(self.options[k]):
                raise ConfigError(f"selected behavior {self.selected[k]} out of range at k={k}")

    def behavior(self, k: int) -> BaseLearner:
        return self.options[k][self.selected[k]]

    def relabel(self, selected: tuple[int, ...]) -> "BehaviorTable":
        return BehaviorTable(self.k_star, self.options, tuple(selected))


@dataclass(frozen=True)
class Learner:
    """A base training procedure plus an optional small-coalition rule.

    ``k_min`` gives the untrained fallback for ``|S| < k_min``; ``table``
    dispatches ``|S| < table.k_star`` to the selected behavior instead.  At
    most one of the two may be active.
    """

    base: BaseLearner
    k_min: int = 0
    table: BehaviorTable | None = None

    def __post_init__(self):
        if self.k_min < 0:
            raise ConfigError("k_min must be nonnegative")
        if self.k_min and self.table is not None:
            raise ConfigError("use either a fallback threshold or a behavior table, not both")

    @property
    def task(self) -> str:
        return self.base.task

    def effective(self, S: Coalition) -> BaseLearner:
        """The learner actually run on ``S`` after the small-coalition rule."""
        k = cardinality(S)
        if k == 0 or k < self.k_min:
            return Untrained(self.task)
        if self.table is not None and k < self.table.k_star:
            return self.table.behavior(k)
        return self.base

    def with_k_min(self, k_min: int) -> "Learner":
        return Learner(self.base, k_min=k_min)

    def __str__(self) -> str:
        s = str(self.base)
        if self.k_min:
            s += f"[k_min={self.k_min}]"
        if self.table is not None:
            s += "[b=" + "".join(str(b) for b in self.table.selected) + "]"
        return s


def apply_small_rule(learner: Learner, S: Coalition, data: Dataset) -> Model:
    """Train ``learner`` on ``S`` honoring its fallback threshold or behavior table."""
    eff = learner.effective(S)
    if isinstance(eff, Untrained):
        return untrained_model(learner.task)
    return eff.fit(S, data)
