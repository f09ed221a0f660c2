"""Search a utility ambiguity set for the specification most (and least) favorable to a group.

Four searches are provided:

* :func:`game_discrete` evaluates every member of a finite candidate set.
* :func:`game_kmin` sweeps the untrained-fallback threshold using one
  sampler run and overwrites the small strata with ``U(empty)``.
* :func:`game_behaviors` picks per-cardinality behaviors independently for
  aggregate favorability, sampling only small coalitions.
* :func:`game_cost` exploits linearity of net benefit in ``p_t / (1 - p_t)``
  so only the interval endpoints need evaluating.

``evaluations_used`` counts scored ``(coalition, metric)`` requests, before
any cache dedup; fresh model trainings are reported separately when known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import DEFAULT_EXACT_CAP, check_cap, coalition, draw_split, popcounts, stream
from .errors import ConfigError, CoverageError, DomainError, SemivalError
from .favorability import FavorabilitySpec, favorability, target_group
from .learners import Learner
from .scoring import ScoreMetric
from .semivalues import (
    WeightScheme,
    combine,
    exact_semivalues,
    exact_strata,
    stratified_sample,
)
from .utility import ModelCache, SmallBehaviorFamily, UtilitySpec, cost_grid


@dataclass
class GameResult:
    best: str
    worst: str
    best_value: float
    worst_value: float
    mode: str
    evaluations_used: int
    fresh_evaluations: int | None = None
    budget: object = None
    seed: int | None = None
    candidates: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def range(self) -> float:
        return self.best_value - self.worst_value

    def to_dict(self) -> dict:
        budget = self.budget.tolist() if isinstance(self.budget, np.ndarray) else self.budget
        return {
            "best": self.best,
            "worst": self.worst,
            "best_value": self.best_value,
            "worst_value": self.worst_value,
            "range": self.range,
            "mode": self.mode,
            "evaluations_used": self.evaluations_used,
            "fresh_evaluations": self.fresh_evaluations,
            "budget": budget,
            "seed": self.seed,
            "candidates": self.candidates,
            "details": self.details,
        }


class _Extremes:
    """Running arg-max / arg-min with first-encounter tie-breaking."""

    def __init__(self):
        self.best = self.worst = None
        self.max = -math.inf
        self.min = math.inf

    def update(self, key, value: float):
        if value > self.max or self.best is None:
            self.best, self.max = key, value
        if value < self.min or self.worst is None:
            self.worst, self.min = key, value


def _fresh(candidates) -> int | None:
    caches = {id(U.cache): U.cache for U in candidates if isinstance(U, UtilitySpec)}
    return sum(c.trainings for c in caches.values()) if caches else None


def game_discrete(candidates, w: WeightScheme, F: FavorabilitySpec, P, mode: str = "exact",
                  budget=None, seed: int | None = None, shared_draws: bool = False,
                  cap: int = DEFAULT_EXACT_CAP, keep_psi: bool = False) -> GameResult:
    """Linear search over a materialized candidate set.

    In ``sampled`` mode each candidate gets its own derived random stream
    unless ``shared_draws`` is set, in which case all candidates see the
    same coalition draws (common random numbers).
    """
    candidates = list(candidates)
    if not candidates:
        raise ConfigError("empty candidate set")
    n = candidates[0].n
    P = target_group(P, n)
    if mode == "exact":
        check_cap(n, cap)
    elif mode == "sampled":
        if budget is None or seed is None:
            raise ConfigError("sampled mode needs a budget and a seed")
    else:
        raise ConfigError(f"unknown mode {mode!r}")
    ext = _Extremes()
    evals = 0
    table, psis = [], {}
    for c, U in enumerate(candidates):
        try:
            if mode == "exact":
                vec = exact_semivalues(U, w, cap=cap)
            else:
                vec, _ = stratified_sample(U, w, budget, seed, stream_key=() if shared_draws else (c,))
            value = favorability(F, vec, P)
        except SemivalError as exc:
            raise type(exc)(f"candidate {U.id!r} failed: {exc}") from exc
        evals += vec.evaluations
        ext.update(U.id, value)
        table.append({"id": U.id, "favorability": value})
        if keep_psi:
            psis[U.id] = vec.psi.tolist()
    details = {"psi": psis} if keep_psi else {}
    return GameResult(ext.best, ext.worst, ext.max, ext.min, mode, evals, _fresh(candidates),
                      budget if mode == "sampled" else None, seed if mode == "sampled" else None,
                      table, details)


def kmin_semivalues(stats, w: WeightScheme, k_min: int) -> np.ndarray:
    """Recombine strata means as if ``U`` fell back to ``U(empty)`` below size ``k_min``.

    ``xplus[i, k]`` averages coalitions of size ``k + 1``, so it is kept for
    ``k >= k_min - 1``; ``xminus[i, k]`` is kept for ``k >= k_min``.
    """
    n = stats.n
    if k_min == 0:
        zplus, zminus = stats.xplus, stats.xminus
    else:
        zplus = stats.xplus.copy()
        zminus = stats.xminus.copy()
        zplus[:, : max(k_min - 1, 0)] = stats.u_empty
        zminus[:, :k_min] = stats.u_empty
    needed = (w.w != 0) & (np.arange(n) >= max(k_min - 1, 0))
    holes = needed[None, :] & (stats.m == 0)
    if holes.any():
        i, k = np.argwhere(holes)[0]
        raise CoverageError(f"k_min={k_min} needs stratum (i={i}, k={k}) which has no samples")
    return combine(zplus, zminus, w)


def game_kmin(base, k_star: int, w: WeightScheme, F: FavorabilitySpec, P, budget=None,
              seed: int | None = None, exact: bool = False, keep_psi: bool = False,
              cap: int = DEFAULT_EXACT_CAP) -> GameResult:
    """Sweep ``k_min = 0 .. k_star`` reusing one set of strata means.

    With ``exact=True`` the strata means come from full enumeration instead
    of sampling.  Candidate ids match :func:`semival.utility.build_u0`.
    """
    n = base.n
    if not 0 <= k_star < n:
        raise DomainError(f"k* must lie in [0, {n}), got {k_star}")
    P = target_group(P, n)
    if exact:
        stats = exact_strata(base, cap=cap)
    else:
        if budget is None or seed is None:
            raise ConfigError("sampled k_min search needs a budget and a seed")
        _, stats = stratified_sample(base, w, budget, seed)
    ext = _Extremes()
    table, psis = [], {}
    for k_min in range(k_star + 1):
        psi = kmin_semivalues(stats, w, k_min)
        uid = base.id if k_min == 0 else f"{base.id}|k_min={k_min}"
        value = favorability(F, psi, P)
        ext.update(uid, value)
        table.append({"id": uid, "k_min": k_min, "favorability": value})
        if keep_psi:
            psis[uid] = psi.tolist()
    details = {"psi": psis} if keep_psi else {}
    return GameResult(ext.best, ext.worst, ext.max, ext.min, "exact" if exact else "sampled",
                      stats.evaluations, _fresh([base]), None if exact else budget, stats.seed,
                      table, details)


def agg_coefficient(w: WeightScheme, group_size: int, k: int, l: int) -> float:
    """Coefficient of ``U(S)`` in the group's aggregate value, for ``|S| = k``, ``|S & P| = l``.

    Each group member inside ``S`` sees ``S`` as a size-``k - 1`` coalition
    plus itself (``+w[k-1]``); each member outside sees ``S`` as a coalition
    it could join (``-w[k]``).
    """
    n = w.n
    inside = l * w.w[k - 1] if l > 0 else 0.0
    outside = (group_size - l) * w.w[k] if k < n and group_size > l else 0.0
    return float(inside - outside)


def _substratum(n: int, P: tuple[int, ...], k: int, l: int) -> np.ndarray:
    pc = popcounts(n)
    masks = np.arange(1 << n, dtype=np.int64)
    inside = pc[masks & coalition(P)]
    return masks[(pc == k) & (inside == l)]


def game_behaviors(family: SmallBehaviorFamily, w: WeightScheme, P, budget=None,
                   seed: int | None = None, exact: bool = False,
                   F: FavorabilitySpec | None = None, cap: int = DEFAULT_EXACT_CAP) -> GameResult:
    """Choose each small cardinality's behavior independently for aggregate favorability.

    For every ``k < k_star`` and every feasible ``l = |S & P|``, the mean
    utility of each behavior over the ``(k, l)`` sub-stratum is estimated
    from ``m_k * f_kl`` draws (at least one), where ``f_kl`` is the share of
    size-``k`` coalitions with ``l`` group members.  Behavior ``b`` then
    scores ``sum_l agg_coefficient(k, l) * count_kl * mean_kl(b)``: its
    contribution to the group's aggregate value.

    ``best_value`` and ``worst_value`` report only this behavior-dependent
    part of the aggregate value; the part from coalitions of size
    ``>= k_star`` is shared by every member and omitted.
    """
    if F is not None and F.kind != "agg":
        raise ConfigError(f"behavior gaming supports aggregate favorability only, not {F.kind}")
    n = family.n
    P = target_group(P, n)
    p = len(P)
    k_star = family.k_star
    if exact:
        check_cap(n, cap)
    elif budget is None or seed is None:
        raise ConfigError("sampled behavior gaming needs a budget and a seed")
    if not exact:
        m_k = [int(budget)] * k_star if np.isscalar(budget) else [int(b) for b in budget]
        if len(m_k) != k_star:
            raise ConfigError(f"need one budget per cardinality k < {k_star}")
    best_labels, worst_labels = [], []
    best_total = worst_total = 0.0
    evals = 0
    per_k = []
    for k in range(k_star):
        opts = family.options[k]
        scores = np.zeros(len(opts))
        total = math.comb(n, k)
        for l in range(max(0, k - (n - p)), min(k, p) + 1):
            count = math.comb(p, l) * math.comb(n - p, k - l)
            if count == 0:
                continue
            alpha = agg_coefficient(w, p, k, l)
            if exact:
                S = _substratum(n, P, k, l)
            else:
                m_kl = max(1, int(round(m_k[k] * count / total)))
                S = draw_split(n, np.asarray(P), k, l, m_kl, stream(seed, k, l))
            for b in range(len(opts)):
                U_b = family.option_utility(k, b)
                vals = U_b.evaluate_many(S)
                evals += len(S)
                scores[b] += alpha * count * float(np.mean(vals))
        b_max = int(np.argmax(scores))
        b_min = int(np.argmin(scores))
        best_labels.append(b_max)
        worst_labels.append(b_min)
        best_total += scores[b_max]
        worst_total += scores[b_min]
        per_k.append({"k": k, "scores": scores.tolist(), "best": b_max, "worst": b_min})
    best = family.member(best_labels)
    worst = family.member(worst_labels)
    return GameResult(best.id, worst.id, float(best_total), float(worst_total),
                      "exact" if exact else "sampled", evals, None,
                      None if exact else budget, None if exact else seed, [],
                      {"best_labels": best_labels, "worst_labels": worst_labels, "per_k": per_k})


def cost_favorability(psi_t: np.ndarray, psi_f: np.ndarray, p_t: float, coef: np.ndarray) -> float:
    """Linear favorability of ``psi(NB(p_t)) = psi(TPR) - p_t/(1-p_t) psi(FPR)``."""
    r = p_t / (1.0 - p_t)
    return float(coef @ psi_t - r * (coef @ psi_f))


def game_cost(classifier, a: float, b: float, w: WeightScheme, P, data, test,
              mode: str = "exact", budget=None, seed: int | None = None,
              F=None, cache: ModelCache | None = None, cap: int = DEFAULT_EXACT_CAP) -> GameResult:
    """Best and worst cost ratio on ``[a, b]`` for a linear favorability.

    ``F`` is aggregate favorability (the default) or a length-``n`` vector
    of coefficients.  Semivalues of the true- and false-positive-rate
    utilities are computed once, sharing models and (when sampled)
    coalition draws; only ``p_t = a`` and ``p_t = b`` are scored.
    """
    cost_grid(a, b, 2)
    if not isinstance(classifier, Learner):
        classifier = Learner(classifier)
    n = data.n
    if F is None or isinstance(F, FavorabilitySpec):
        if F is not None and F.kind != "agg":
            raise ConfigError(f"cost-ratio gaming needs a linear favorability, not {F.kind}")
        coef = np.zeros(n)
        coef[list(target_group(P, n))] = 1.0
    else:
        coef = np.asarray(F, dtype=float)
        if coef.shape != (n,):
            raise ConfigError(f"linear favorability needs {n} coefficients")
    cache = ModelCache() if cache is None else cache
    U_T = UtilitySpec(classifier, ScoreMetric("tpr"), data, test, cache=cache, id=f"{classifier}|tpr")
    U_F = UtilitySpec(classifier, ScoreMetric("fpr"), data, test, cache=cache, id=f"{classifier}|fpr")
    if mode == "exact":
        v_t = exact_semivalues(U_T, w, cap=cap)
        v_f = exact_semivalues(U_F, w, cap=cap)
    elif mode == "sampled":
        if budget is None or seed is None:
            raise ConfigError("sampled mode needs a budget and a seed")
        v_t, _ = stratified_sample(U_T, w, budget, seed)
        v_f, _ = stratified_sample(U_F, w, budget, seed)
    else:
        raise ConfigError(f"unknown mode {mode!r}")
    ext = _Extremes()
    table = []
    for p in (a, b):
        uid = f"{classifier}|nb(p_t={float(p)!r})"
        value = cost_favorability(v_t.psi, v_f.psi, p, coef)
        ext.update(uid, value)
        table.append({"id": uid, "p_t": p, "favorability": value})
    return GameResult(ext.best, ext.worst, ext.max, ext.min, mode, v_t.evaluations + v_f.evaluations,
                      cache.trainings, budget if mode == "sampled" else None,
                      seed if mode == "sampled" else None, table,
                      {"psi_tpr": v_t.psi.tolist(), "psi_fpr": v_f.psi.tolist()})
