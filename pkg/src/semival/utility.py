"""Utilities ``U = V o A`` and the finite ambiguity sets built from them.

Anything with an ``id``, a player count ``n`` and a ``__call__`` mapping a
coalition bitmask to a float is a utility.  :class:`UtilitySpec` composes a
learner with a score metric on a concrete train/test pair; the other classes
cover synthetic games given as tables or callables, and the wrappers that
ambiguity sets need when the base is not learner-backed.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .data import Coalition, Dataset, cardinality, check_cap, popcounts, DEFAULT_EXACT_CAP
from .errors import ConfigError, DomainError, SemivalError
from .learners import BaseLearner, BehaviorTable, Learner, Untrained, untrained_model
from .scoring import ScoreMetric, finish, get_transform, raw_score


class Utility:
    """Base class: a deterministic map from coalitions to scalar scores."""

    id: str
    n: int

    def __call__(self, S: Coalition) -> float:
        raise NotImplementedError

    def evaluate_many(self, masks: np.ndarray) -> np.ndarray:
        return np.array([self(int(s)) for s in masks], dtype=float)

    def table(self, cap: int = DEFAULT_EXACT_CAP) -> np.ndarray:
        """``U(S)`` for every bitmask ``S`` in ``0 .. 2**n - 1``."""
        check_cap(self.n, cap)
        return self.evaluate_many(np.arange(1 << self.n, dtype=np.int64))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.id!r})"


class TableUtility(Utility):
    """A game given by its full value table indexed by bitmask."""

    def __init__(self, values, id: str = "table"):
        values = np.asarray(values, dtype=float)
        n = int(np.log2(len(values)))
        if len(values) != 1 << n:
            raise DomainError("a utility table needs 2**n entries")
        self.values = values
        self.n = n
        self.id = id

    def __call__(self, S: Coalition) -> float:
        return float(self.values[int(S)])

    def evaluate_many(self, masks: np.ndarray) -> np.ndarray:
        return self.values[np.asarray(masks, dtype=np.int64)]

    def table(self, cap: int = DEFAULT_EXACT_CAP) -> np.ndarray:
        check_cap(self.n, cap)
        return self.values.copy()


class FunctionUtility(Utility):
    def __init__(self, fn: Callable[[Coalition], float], n: int, id: str = "function"):
        self.fn = fn
        self.n = n
        self.id = id

    def __call__(self, S: Coalition) -> float:
        return float(self.fn(int(S)))


class FallbackUtility(Utility):
    """``U(S)`` for ``|S| >= k_min``, else ``U(empty)``."""

    def __init__(self, base: Utility, k_min: int, id: str | None = None):
        self.base = base
        self.k_min = k_min
        self.n = base.n
        self.id = id or f"{base.id}|k_min={k_min}"

    def __call__(self, S: Coalition) -> float:
        return self.base(0) if cardinality(S) < self.k_min else self.base(S)

    def evaluate_many(self, masks: np.ndarray) -> np.ndarray:
        masks = np.asarray(masks)
        out = self.base.evaluate_many(masks)
        small = np.array([cardinality(s) < self.k_min for s in masks], dtype=bool)
        if small.any():
            out = out.copy()
            out[small] = self.base(0)
        return out


class TransformedUtility(Utility):
    """``f(U(S))`` for a registered strictly increasing transform ``f``."""

    def __init__(self, base: Utility, transform_id: str, id: str | None = None):
        self.base = base
        self.transform_id = transform_id
        self.fn = get_transform(transform_id)
        self.n = base.n
        self.id = id or f"{base.id}|{transform_id}"

    def __call__(self, S: Coalition) -> float:
        return float(self.fn(self.base(S)))

    def evaluate_many(self, masks: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(self.base.evaluate_many(masks)), dtype=float)


class BehaviorUtility(Utility):
    """Base utility on ``|S| >= k_star``; option ``labels[k]`` of ``options[k]`` below."""

    def __init__(self, base: Utility, options: Sequence[Sequence[Utility]], labels: Sequence[int], id=None):
        self.base = base
        self.options = options
        self.labels = tuple(labels)
        self.k_star = len(options)
        self.n = base.n
        self.id = id or f"{base.id}|b={''.join(map(str, self.labels))}"

    def __call__(self, S: Coalition) -> float:
        k = cardinality(S)
        if k < self.k_star:
            return self.options[k][self.labels[k]](S)
        return self.base(S)


# -- learner-backed utilities -------------------------------------------------


class ModelCache:
    """Shared memo of test-set predictions keyed on ``(effective learner, coalition)``.

    Utilities that differ only in their score metric, or only in how they
    treat small coalitions, share every model they have in common.  Each
    model is trained once even under concurrent requests.
    """

    def __init__(self):
        self._store: dict = {}
        self._locks: dict = {}
        self._guard = threading.Lock()
        self.trainings = 0

    def predictions(self, learner: BaseLearner, S: Coalition, data: Dataset, test: Dataset) -> np.ndarray:
        # an untrained model ignores its coalition, so it is cached once
        key = (learner, 0 if isinstance(learner, Untrained) else int(S), id(data), id(test))
        hit = self._store.get(key)
        if hit is not None:
            return hit
        # one lock per key: concurrent requests for the same model train it once
        with self._guard:
            lock = self._locks.setdefault(key, threading.Lock())
        with lock:
            hit = self._store.get(key)
            if hit is not None:
                return hit
            model = untrained_model(learner.task) if isinstance(learner, Untrained) else learner.fit(S, data)
            if model.weights is not None and len(model.weights) != test.feature_dim:
                raise DomainError("model and test set feature dimensions differ")
            preds = model.predict(test.X)
            preds.flags.writeable = False
            self._store[key] = preds
            with self._guard:
                self.trainings += 1
                del self._locks[key]
        return preds

    def __len__(self) -> int:
        return len(self._store)


@dataclass(eq=False)
class UtilitySpec(Utility):
    """``U(S) = V(A(S))``: train ``learner`` on ``S``, score on ``test``.

    Scores are memoized per coalition; models are memoized in ``cache``,
    which several specs may share.
    """

    learner: Learner
    metric: ScoreMetric
    data: Dataset
    test: Dataset
    cache: ModelCache | None = None
    id: str = ""
    memo: bool = True
    _scores: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if not self.id:
            self.id = f"{self.learner}|{self.metric}"
        if self.metric.classification and self.learner.task != "classification":
            raise ConfigError(f"metric {self.metric.kind} needs a classification learner")
        if not self.metric.classification and self.learner.task != "regression":
            raise ConfigError(f"metric {self.metric.kind} needs a regression learner")
        if self.data.feature_dim != self.test.feature_dim:
            raise DomainError("training and test sets have different feature dimensions")
        if self.cache is None:
            self.cache = ModelCache()

    @property
    def n(self) -> int:
        return self.data.n

    def __call__(self, S: Coalition) -> float:
        return evaluate(self, S)

    def replace(self, **changes) -> "UtilitySpec":
        kw = dict(learner=self.learner, metric=self.metric, data=self.data, test=self.test,
                  cache=self.cache, memo=self.memo, id="")
        kw.update(changes)
        return UtilitySpec(**kw)


def evaluate(U: UtilitySpec, S: Coalition) -> float:
    """Score of coalition ``S`` under ``U``; errors name the utility and ``|S|``."""
    S = int(S)
    if U.memo:
        hit = U._scores.get(S)
        if hit is not None:
            return hit
    try:
        preds = U.cache.predictions(U.learner.effective(S), S, U.data, U.test)
        value = finish(U.metric, raw_score(U.metric.kind, preds, U.test, U.metric.p_t))
    except SemivalError as exc:
        raise type(exc)(f"[utility {U.id}, |S|={cardinality(S)}] {exc}") from exc
    if U.memo:
        U._scores[S] = value
    return value


def make_utility(learner, metric: ScoreMetric, data: Dataset, test: Dataset,
                 cache: ModelCache | None = None, id: str = "") -> UtilitySpec:
    if not isinstance(learner, Learner):
        learner = Learner(learner)
    return UtilitySpec(learner, metric, data, test, cache=cache, id=id)


# -- ambiguity sets -------------------------------------------------------------


@dataclass
class CandidateSet:
    """An ordered, finite list of utilities sharing one player set."""

    members: list
    family: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.members:
            raise ConfigError("a candidate set needs at least one member")
        ns = {U.n for U in self.members}
        if len(ns) != 1:
            raise ConfigError(f"candidate members disagree on n: {sorted(ns)}")
        ids = [U.id for U in self.members]
        if len(set(ids)) != len(ids):
            raise ConfigError("candidate utility ids must be unique")

    @property
    def n(self) -> int:
        return self.members[0].n

    @property
    def ids(self) -> list[str]:
        return [U.id for U in self.members]

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[Utility]:
        return iter(self.members)

    def __getitem__(self, i):
        return self.members[i]


def build_u0(base: Utility, k_star: int) -> CandidateSet:
    """``k_star + 1`` members; member ``t`` falls back to ``U(empty)`` below size ``t``."""
    if not 0 <= k_star < base.n:
        raise DomainError(f"k* must lie in [0, n) = [0, {base.n}), got {k_star}")
    members = [base]
    for t in range(1, k_star + 1):
        if isinstance(base, UtilitySpec):
            if base.learner.table is not None:
                raise ConfigError("the fallback family needs a base learner without a behavior table")
            members.append(base.replace(learner=base.learner.with_k_min(t), id=f"{base.id}|k_min={t}"))
        else:
            members.append(FallbackUtility(base, t))
    return CandidateSet(members, family="u0", params={"k_star": k_star})


class SmallBehaviorFamily:
    """The product family of per-cardinality behaviors, kept implicit.

    ``options[k]`` lists the behaviors for size-``k`` coalitions, ``k < k_star``.
    For a :class:`UtilitySpec` base the options are base learners; for any
    other base they are utilities evaluated directly on the coalition.
    """

    family = "small-behavior"

    def __init__(self, base: Utility, options: Sequence[Sequence], max_options: int = 16):
        options = [tuple(opts) for opts in options]
        for k, opts in enumerate(options):
            if not opts and not (k == 0 and isinstance(base, UtilitySpec)):
                raise ConfigError(f"no behavior option for cardinality {k}")
            if len(opts) > max_options:
                raise ConfigError(f"{len(opts)} options at k={k} exceeds the limit {max_options}")
        if isinstance(base, UtilitySpec):
            options[0] = options[0] or (Untrained(base.learner.task),)
        if len(options) >= base.n + 1:
            raise DomainError("k* must be below n")
        self.base = base
        self.options = options
        self.k_star = len(options)

    @property
    def n(self) -> int:
        return self.base.n

    def __len__(self) -> int:
        return int(np.prod([len(o) for o in self.options])) if self.options else 1

    def labels(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(len(o)) for o in self.options))

    def option_utility(self, k: int, b: int) -> Utility:
        """Utility applying behavior ``b`` to any coalition (meant for size ``k``)."""
        opt = self.options[k][b]
        if isinstance(self.base, UtilitySpec):
            return self.base.replace(learner=Learner(opt), id=f"{self.base.id}|k={k}:{opt}")
        return opt

    def member(self, labels: Sequence[int]) -> Utility:
        labels = tuple(int(b) for b in labels)
        if len(labels) != self.k_star:
            raise ConfigError(f"behavior label vector needs {self.k_star} entries")
        tag = "".join(str(b) for b in labels)
        if isinstance(self.base, UtilitySpec):
            table = BehaviorTable(self.k_star, tuple(self.options), labels)
            return self.base.replace(learner=Learner(self.base.learner.base, table=table),
                                     id=f"{self.base.id}|b={tag}")
        return BehaviorUtility(self.base, self.options, labels, id=f"{self.base.id}|b={tag}")

    def materialize(self) -> CandidateSet:
        return CandidateSet([self.member(b) for b in self.labels()], family=self.family,
                            params={"k_star": self.k_star})


def build_small_behaviors(base: Utility, tables: Sequence[Sequence], max_options: int = 16) -> SmallBehaviorFamily:
    return SmallBehaviorFamily(base, tables, max_options=max_options)


def build_mono(base: Utility, transforms: Sequence[str]) -> CandidateSet:
    """One member per registered transform; ``identity`` yields ``base`` itself."""
    members = []
    for t in transforms:
        get_transform(t)
        if t == "identity":
            members.append(base)
        elif isinstance(base, UtilitySpec):
            if base.metric.transform != "identity":
                raise ConfigError("mono family needs an untransformed base metric")
            if t == "neg-sqrt" and base.metric.kind not in ("neg-mse", "neg-rmse"):
                raise ConfigError("neg-sqrt is only increasing on nonpositive scores")
            members.append(base.replace(metric=base.metric.with_transform(t), id=f"{base.id}|{t}"))
        else:
            members.append(TransformedUtility(base, t))
    return CandidateSet(members, family="mono", params={"transforms": list(transforms)})


def cost_grid(a: float, b: float, grid: int) -> np.ndarray:
    if not 0.0 < a < b < 1.0:
        raise DomainError(f"cost-ratio interval needs 0 < a < b < 1, got [{a}, {b}]")
    if grid < 2:
        raise DomainError("cost-ratio grid needs at least two points")
    return np.linspace(a, b, grid)


def build_cost(classifier, a: float, b: float, grid: int, data: Dataset, test: Dataset,
               cache: ModelCache | None = None) -> CandidateSet:
    """Net-benefit utilities at ``grid`` equally spaced ``p_t`` on ``[a, b]``."""
    if not isinstance(classifier, Learner):
        classifier = Learner(classifier)
    if classifier.task != "classification":
        raise ConfigError("the cost-ratio family needs a classification learner")
    cache = ModelCache() if cache is None else cache
    members = [
        UtilitySpec(classifier, ScoreMetric("net-benefit", p_t=float(p)), data, test, cache=cache,
                    id=f"{classifier}|nb(p_t={float(p)!r})")
        for p in cost_grid(a, b, grid)
    ]
    return CandidateSet(members, family="cost", params={"a": a, "b": b, "grid": grid})


def coalitions_by_size(n: int) -> list[np.ndarray]:
    """Bitmasks of all coalitions grouped by cardinality."""
    pc = popcounts(n)
    masks = np.arange(1 << n, dtype=np.int64)
    return [masks[pc == k] for k in range(n + 1)]
