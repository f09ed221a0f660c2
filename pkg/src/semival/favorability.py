"""Favorability of a semivalue outcome for a target group, and the worst-case range."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DegenerateBudgetError, DomainError

KINDS = ("agg", "rank", "filt", "payout", "scaled-rank")
PAYOUT_EPS = 1e-12


@dataclass(frozen=True)
class FavorabilitySpec:
    kind: str = "agg"
    alpha: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown favorability {self.kind!r}")
        if self.kind == "filt" and (self.alpha is None or not 0.0 < self.alpha < 1.0):
            raise ConfigError(f"filter survival needs alpha in (0, 1), got {self.alpha}")

    @property
    def singleton_only(self) -> bool:
        return self.kind in ("rank", "scaled-rank")

    @property
    def linear(self) -> bool:
        return self.kind == "agg"

    def __str__(self) -> str:
        return f"filt(alpha={self.alpha!r})" if self.kind == "filt" else self.kind


def target_group(indices: Iterable[int], n: int) -> tuple[int, ...]:
    """Validated, sorted, duplicate-free target group."""
    P = tuple(sorted({int(i) for i in indices}))
    if not P:
        raise DomainError("target group must be nonempty")
    if P[0] < 0 or P[-1] >= n:
        raise DomainError(f"target group indices must lie in 0..{n - 1}")
    return P


def rank_of(i: int, x: Sequence[float]) -> int:
    """Number of entries strictly smaller than ``x[i]``; tied entries share a rank."""
    x = np.asarray(x, dtype=float)
    return int(np.sum(x[i] > x))


def ranks(x: Sequence[float]) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.searchsorted(np.sort(x), x, side="left")


def favorability(spec: FavorabilitySpec, psi, P: Iterable[int]) -> float:
    """Favorability of ``psi`` for group ``P``.

    ``agg`` sums the group's values; ``payout`` rescales that sum so the
    whole dataset's values total ``n``; ``rank``/``scaled-rank`` (singleton
    groups only) count strictly smaller values, optionally divided by ``n``;
    ``filt`` is the fraction of ``P`` whose rank exceeds ``alpha * n``.
    """
    x = np.asarray(getattr(psi, "psi", psi), dtype=float)
    n = len(x)
    P = target_group(P, n)
    if spec.singleton_only and len(P) != 1:
        raise DomainError(f"{spec.kind} favorability is only defined for singleton groups")
    if spec.kind == "agg":
        return float(np.sum(x[list(P)]))
    if spec.kind == "payout":
        total = float(np.sum(x))
        if abs(total) < PAYOUT_EPS:
            raise DegenerateBudgetError("payout favorability undefined: semivalues sum to ~0")
        return float(np.sum(x[list(P)])) * n / total
    if spec.kind == "rank":
        return float(rank_of(P[0], x))
    if spec.kind == "scaled-rank":
        return rank_of(P[0], x) / n
    r = ranks(x)
    return float(np.mean([r[i] > spec.alpha * n for i in P]))


def survivors(psi, alpha: float) -> np.ndarray:
    """Indices that survive dropping the bottom ``alpha`` fraction (rank > alpha * n)."""
    x = np.asarray(getattr(psi, "psi", psi), dtype=float)
    return np.flatnonzero(ranks(x) > alpha * len(x))


def range_over(values: Sequence[tuple[str, float]]) -> tuple[float, str, str]:
    """``(max - min, id of max, id of min)``; the first candidate wins ties."""
    if not values:
        raise DomainError("range needs at least one candidate")
    best_id, best = values[0]
    worst_id, worst = values[0]
    for uid, v in values[1:]:
        if v > best:
            best_id, best = uid, v
        if v < worst:
            worst_id, worst = uid, v
    return float(best - worst), best_id, worst_id
