"""Brute-force certification oracle for the gaming searches.

Deliberately naive and self-contained: semivalues come from a direct loop
over ``itertools.combinations`` and favorability is recomputed inline, so
nothing here shares a code path with :mod:`semival.semivalues`,
:mod:`semival.favorability` or :mod:`semival.gaming`.
"""

from __future__ import annotations

import itertools

from .data import DEFAULT_EXACT_CAP, check_cap


def brute_force_semivalues(U, weights, cap: int = DEFAULT_EXACT_CAP) -> list[float]:
    """``sum over S not containing j of w[|S|] * (U(S + j) - U(S))``, one coalition at a time."""
    n = U.n
    check_cap(n, cap)
    memo: dict[int, float] = {}

    def u(members) -> float:
        mask = sum(1 << j for j in members)
        if mask not in memo:
            memo[mask] = float(U(mask))
        return memo[mask]

    psi = []
    for j in range(n):
        others = [i for i in range(n) if i != j]
        total = 0.0
        for size in range(n):
            for S in itertools.combinations(others, size):
                total += float(weights[size]) * (u(S + (j,)) - u(S))
        psi.append(total)
    return psi


def _favor(kind: str, psi: list[float], P: list[int], alpha: float | None) -> float:
    n = len(psi)

    def rank(i):
        return sum(1 for v in psi if psi[i] > v)

    if kind == "agg":
        return sum(psi[i] for i in P)
    if kind == "payout":
        return sum(psi[i] for i in P) * n / sum(psi)
    if kind == "rank":
        return float(rank(P[0]))
    if kind == "scaled-rank":
        return rank(P[0]) / n
    if kind == "filt":
        return sum(1 for i in P if rank(i) > alpha * n) / len(P)
    raise ValueError(f"oracle does not know favorability {kind!r}")


def oracle_argmax(candidates, w, F, P, cap: int = DEFAULT_EXACT_CAP):
    """Exact ``(best id, worst id, [(id, favorability), ...])`` over ``candidates``.

    ``w`` is a weight scheme or a plain weight sequence; ``F`` a
    favorability spec (``kind`` and ``alpha`` are read) or a kind string.
    Ties go to the earliest candidate.
    """
    weights = list(getattr(w, "w", w))
    kind = getattr(F, "kind", F)
    alpha = getattr(F, "alpha", None)
    P = sorted(set(int(i) for i in P))
    values = []
    for U in candidates:
        psi = brute_force_semivalues(U, weights, cap=cap)
        values.append((U.id, _favor(kind, psi, P, alpha)))
    best = max(range(len(values)), key=lambda c: (values[c][1], -c))
    worst = min(range(len(values)), key=lambda c: (values[c][1], c))
    return values[best][0], values[worst][0], values
