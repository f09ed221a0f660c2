"""Datasets, train/test splitting and coalitions.

Coalitions are plain Python ``int`` bitmasks: bit ``j`` is set when
observation ``j`` belongs to the coalition.  This keeps membership tests and
cardinality cheap, makes coalitions hashable cache keys, and works for any
``n`` because Python integers are unbounded.  Vectorized helpers return
``int64`` arrays of masks when ``n <= 62``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Literal

import numpy as np

from .errors import CapExceededError, DomainError, ParseError, StandardizationError

Coalition = int
Task = Literal["regression", "classification"]

DEFAULT_EXACT_CAP = 20
_INT64_MAX_N = 62


@dataclass(frozen=True, eq=False)
class Dataset:
    """Indexed observations ``(x_j, y_j)``; also used for the held-out test set.

    Arrays are copied and made read-only on construction.
    """

    X: np.ndarray
    y: np.ndarray
    task: Task = "regression"
    feature_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        X = np.array(self.X, dtype=float, copy=True)
        y = np.array(self.y, dtype=float, copy=True)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[1] < 1:
            raise DomainError("features must be a 2-D array with at least one column")
        if y.shape != (X.shape[0],):
            raise DomainError(f"expected {X.shape[0]} labels, got shape {y.shape}")
        if X.shape[0] < 1:
            raise DomainError("a dataset needs at least one observation")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DomainError("features and labels must be finite")
        if self.task == "classification" and not np.all(np.isin(y, (0.0, 1.0))):
            raise DomainError("classification labels must be 0 or 1")
        if self.task not in ("regression", "classification"):
            raise DomainError(f"unknown task {self.task!r}")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.n

    def rows(self, S: Coalition) -> np.ndarray:
        """Indices of the observations in coalition ``S``."""
        return members(S)


TestSet = Dataset


def load_csv(
    path: str | Path,
    label_column: str,
    test_fraction: float,
    seed: int,
    task: Task | None = None,
) -> tuple[Dataset, TestSet]:
    """Read a numeric CSV and split it into training and test sets.

    Parameters
    ----------
    path : path-like
        CSV file with a header row; every cell must parse as a float.
    label_column : str
        Header name of the label column.  All other columns are features.
    test_fraction : float
        Fraction of rows held out, in (0, 1).  At least one row lands on
        each side of the split.
    seed : int
        Drives the shuffle; the split depends on nothing else.
    task : {"regression", "classification"}, optional
        Inferred when omitted: labels all in {0, 1} mean classification.

    Returns
    -------
    (Dataset, TestSet)
        For regression, labels of both sets are standardized with the
        training split's mean and (population) standard deviation.
    """
    if not 0.0 < test_fraction < 1.0:
        raise DomainError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", row=1) from None
        if label_column not in header:
            raise ParseError(f"label column {label_column!r} not found in header {header}", row=1)
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not c.strip() for c in raw):
                continue
            if len(raw) != len(header):
                raise ParseError(f"expected {len(header)} cells, got {len(raw)}", row=lineno)
            try:
                vals = [float(c) for c in raw]
            except ValueError as exc:
                raise ParseError(str(exc), row=lineno) from None
            if not all(math.isfinite(v) for v in vals):
                raise ParseError("non-finite value", row=lineno)
            rows.append(vals)
    if len(rows) < 2:
        raise ParseError("need at least two data rows to split", row=None)

    table = np.asarray(rows, dtype=float)
    label_idx = header.index(label_column)
    y = table[:, label_idx]
    X = np.delete(table, label_idx, axis=1)
    if X.shape[1] == 0:
        raise ParseError("no feature columns besides the label", row=1)
    names = tuple(h for j, h in enumerate(header) if j != label_idx)
    if task is None:
        task = "classification" if np.all(np.isin(y, (0.0, 1.0))) else "regression"

    n_total = len(y)
    n_test = min(max(int(round(test_fraction * n_total)), 1), n_total - 1)
    order = np.random.default_rng(seed).permutation(n_total)
    test_idx, train_idx = order[:n_test], order[n_test:]

    y_train, y_test = y[train_idx], y[test_idx]
    if task == "regression":
        mu = y_train.mean()
        sd = y_train.std()
        if not sd > 1e-12 * max(1.0, abs(mu)):
            raise StandardizationError("regression label column is constant on the training split")
        y_train = (y_train - mu) / sd
        y_test = (y_test - mu) / sd
    train = Dataset(X[train_idx], y_train, task=task, feature_names=names)
    test = Dataset(X[test_idx], y_test, task=task, feature_names=names)
    return train, test


# -- coalitions -------------------------------------------------------------


def coalition(indices: Iterable[int]) -> Coalition:
    mask = 0
    for j in indices:
        mask |= 1 << int(j)
    return mask


def members(S: Coalition) -> np.ndarray:
    """Sorted member indices of ``S``."""
    S = int(S)
    out = []
    j = 0
    while S:
        if S & 1:
            out.append(j)
        S >>= 1
        j += 1
    return np.asarray(out, dtype=np.intp)


def cardinality(S: Coalition) -> int:
    return bin(int(S)).count("1")


def full_coalition(n: int) -> Coalition:
    return (1 << n) - 1


def check_cap(n: int, cap: int = DEFAULT_EXACT_CAP) -> None:
    if n > cap:
        raise CapExceededError(
            f"exact enumeration over 2^{n} coalitions exceeds the cap n <= {cap}; "
            "use stratified sampling instead or raise the cap explicitly"
        )


def enumerate_coalitions(n: int, cap: int = DEFAULT_EXACT_CAP) -> Iterator[Coalition]:
    """Yield all ``2**n`` coalitions once each, in increasing bitmask order."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    check_cap(n, cap)
    return iter(range(1 << n))


def popcounts(n: int) -> np.ndarray:
    """Cardinality of every bitmask ``0 .. 2**n - 1``."""
    pc = np.zeros(1 << n, dtype=np.int64)
    for j in range(n):
        pc[1 << j : 1 << (j + 1)] = pc[: 1 << j] + 1
    return pc


@dataclass(frozen=True)
class Stratum:
    """Coalitions of size ``cardinality`` not containing ``focal``.

    With ``side="includes"`` the focal index is added to each coalition, so
    members have size ``cardinality + 1``; the count is unchanged.
    """

    focal: int
    cardinality: int
    side: Literal["excludes", "includes"] = "excludes"

    def size(self, n: int) -> int:
        return math.comb(n - 1, self.cardinality)


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for a sub-task identified by ``key``.

    Streams depend only on ``(seed, key)``, never on the order in which they
    are requested.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def draw_excluding(n: int, focal: int, k: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``m`` i.i.d. uniform size-``k`` coalitions avoiding ``focal``.

    Returns an ``int64`` array for ``n <= 62`` and an object array of Python
    ints otherwise.
    """
    if not 0 <= focal < n:
        raise DomainError(f"focal index {focal} outside 0..{n - 1}")
    if not 0 <= k <= n - 1:
        raise DomainError(f"stratum cardinality {k} outside 0..{n - 1}")
    if m < 0:
        raise DomainError("sample count must be nonnegative")
    others = np.delete(np.arange(n), focal)
    wide = n > _INT64_MAX_N
    dtype = object if wide else np.int64
    if k == 0:
        return np.zeros(m, dtype=dtype)
    if k == n - 1:
        full = full_coalition(n) ^ (1 << focal)
        return np.full(m, full, dtype=dtype)
    keys = rng.random((m, n - 1))
    picks = others[np.argpartition(keys, k - 1, axis=1)[:, :k]]
    if wide:
        return np.array([coalition(row) for row in picks], dtype=object)
    return np.sum(np.left_shift(np.int64(1), picks.astype(np.int64)), axis=1)


def draw_split(
    n: int, group: np.ndarray, k: int, l: int, m: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``m`` uniform size-``k`` coalitions with exactly ``l`` members in ``group``."""
    group = np.asarray(sorted(set(int(g) for g in group)), dtype=np.int64)
    rest = np.setdiff1d(np.arange(n), group)
    if not (0 <= l <= len(group) and 0 <= k - l <= len(rest)):
        raise DomainError(f"no coalition of size {k} has {l} members in the group")
    out = []
    for _ in range(m):
        inside = rng.choice(group, size=l, replace=False) if l else ()
        outside = rng.choice(rest, size=k - l, replace=False) if k - l else ()
        out.append(coalition(list(inside) + list(outside)))
    return np.array(out, dtype=object if n > _INT64_MAX_N else np.int64)


def sample_stratum(stratum: Stratum, n: int, m: int, rng: np.random.Generator) -> list[Coalition]:
    """Draw ``m`` coalitions uniformly, with replacement, from ``stratum``."""
    masks = draw_excluding(n, stratum.focal, stratum.cardinality, m, rng)
    if stratum.side == "includes":
        masks = masks | (1 << stratum.focal)
    return [int(s) for s in masks]
