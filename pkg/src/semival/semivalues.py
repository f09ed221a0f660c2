r"""Semivalue weights, exact semivalues and the stratified sampler.

A semivalue with weights :math:`w_0, \dots, w_{n-1}` assigns

.. math::

    \psi_j = \sum_{S \subseteq D \setminus \{j\}} w_{|S|} [U(S \cup \{j\}) - U(S)].

Weights follow the per-subset convention: the total mass over the subsets
of ``D \ {j}``, :math:`\sum_k \binom{n-1}{k} w_k`, equals one.

The sampler estimates the mean utilities of each stratum of coalitions of
size ``k`` without focal point ``i`` (``xminus``) and of the same coalitions
with ``i`` added (``xplus``), then recombines

.. math::

    \hat\psi_i = \sum_k w_k \binom{n-1}{k} (\hat X^+_{i,k} - \hat X^-_{i,k}).

The strata means are kept in :class:`StrataStats` so they can be re-weighted
or partially overwritten without new utility evaluations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import DEFAULT_EXACT_CAP, check_cap, draw_excluding, popcounts, stream
from .errors import ConfigError, CoverageError, DomainError

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class WeightScheme:
    name: str
    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        w.flags.writeable = False
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return len(self.w)

    def mass(self) -> float:
        """Total weight over all subsets of the other ``n - 1`` players."""
        n = self.n
        return math.fsum(math.comb(n - 1, k) * float(self.w[k]) for k in range(n))

    def stratum_coefficients(self) -> np.ndarray:
        """``w_k * C(n-1, k)``, the weight of stratum ``k``'s mean marginal contribution."""
        n = self.n
        return np.array([self.w[k] * math.comb(n - 1, k) for k in range(n)])

    def to_dict(self) -> dict:
        return {"name": self.name, "w": [float(x) for x in self.w]}


def make_weights(name: str, n: int, w=None) -> WeightScheme:
    """Named weight family for ``n`` players.

    ``shapley``: ``1 / (n C(n-1, k))``; ``banzhaf``: ``2**(1-n)``; ``loo``:
    all weight on ``k = n - 1``.  ``custom`` takes ``w`` and validates the
    per-subset normalization.
    """
    if n < 1:
        raise DomainError("a weight scheme needs n >= 1")
    if name == "shapley":
        w = [1.0 / (n * math.comb(n - 1, k)) for k in range(n)]
    elif name == "banzhaf":
        w = [2.0 ** (1 - n)] * n
    elif name == "loo":
        w = [0.0] * (n - 1) + [1.0]
    elif name == "custom":
        if w is None or len(w) != n:
            raise ConfigError(f"custom weights need exactly {n} entries")
        w = [float(x) for x in w]
        if any(x < 0 or not math.isfinite(x) for x in w):
            raise ConfigError("custom weights must be finite and nonnegative")
    else:
        raise ConfigError(f"unknown weight scheme {name!r}")
    scheme = WeightScheme(name, w)
    if abs(scheme.mass() - 1.0) > NORMALIZATION_TOL:
        raise ConfigError(f"weights must satisfy sum_k C(n-1,k) w_k = 1; got {scheme.mass()!r}")
    return scheme


def beta_shapley_weights(n: int, alpha: float, beta: float) -> list[float]:
    """Beta(alpha, beta)-Shapley weights, normalized for :func:`make_weights` ``custom``."""
    raw = [math.exp(math.lgamma(k + beta) + math.lgamma(n - 1 - k + alpha) - math.lgamma(n - 1 + alpha + beta))
           for k in range(n)]
    total = math.fsum(math.comb(n - 1, k) * r for k, r in enumerate(raw))
    return [r / total for r in raw]


@dataclass(eq=False)
class SemivalueVector:
    psi: np.ndarray
    scheme: str
    utility_id: str
    mode: str = "exact"
    budget: object = None
    seed: int | None = None
    evaluations: int = 0

    def __len__(self) -> int:
        return len(self.psi)

    def __getitem__(self, i):
        return self.psi[i]

    def to_dict(self) -> dict:
        budget = self.budget
        if isinstance(budget, np.ndarray):
            budget = budget.tolist()
        return {
            "psi": [float(x) for x in self.psi],
            "scheme": self.scheme,
            "utility_id": self.utility_id,
            "mode": self.mode,
            "budget": budget,
            "seed": self.seed,
            "evaluations": self.evaluations,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SemivalueVector":
        budget = d.get("budget")
        if isinstance(budget, list):
            budget = np.asarray(budget, dtype=np.int64)
        return cls(np.asarray(d["psi"], dtype=float), d["scheme"], d["utility_id"], d.get("mode", "exact"),
                   budget, d.get("seed"), d.get("evaluations", 0))


def _table(U, cap: int) -> np.ndarray:
    check_cap(U.n, cap)
    return np.asarray(U.table(cap=cap), dtype=float)


def semivalues_from_table(values: np.ndarray, scheme: WeightScheme) -> np.ndarray:
    """Exact semivalues of the game whose values by bitmask are ``values``."""
    values = np.asarray(values, dtype=float)
    n = scheme.n
    if len(values) != 1 << n:
        raise DomainError(f"table has {len(values)} entries, expected 2**{n}")
    pc = popcounts(n)
    masks = np.arange(1 << n, dtype=np.int64)
    wk = scheme.w[np.minimum(pc, n - 1)]
    psi = np.empty(n)
    for j in range(n):
        bit = np.int64(1) << j
        without = masks[(masks & bit) == 0]
        psi[j] = np.sum(wk[without] * (values[without | bit] - values[without]))
    return psi


def exact_semivalues(U, w: WeightScheme, cap: int = DEFAULT_EXACT_CAP) -> SemivalueVector:
    """Semivalues by full enumeration; every coalition is scored exactly once."""
    if w.n != U.n:
        raise DomainError(f"weights are for n={w.n} but the utility has n={U.n}")
    values = _table(U, cap)
    return SemivalueVector(semivalues_from_table(values, w), w.name, U.id, "exact",
                           evaluations=len(values))


def budget_matrix(budget, w: WeightScheme) -> np.ndarray:
    """Per-stratum sample counts ``m[i, k]``.

    An integer ``B`` gives ``B`` draws to every stratum with ``w_k != 0``; an
    array is validated and used as is.
    """
    n = w.n
    if np.isscalar(budget):
        B = int(budget)
        if B < 1:
            raise ConfigError("uniform budget must be at least 1")
        m = np.zeros((n, n), dtype=np.int64)
        m[:, w.w != 0] = B
        return m
    m = np.asarray(budget, dtype=np.int64)
    if m.shape != (n, n) or np.any(m < 0):
        raise ConfigError(f"budget matrix must be a nonnegative {n}x{n} integer array")
    return m


def _mean(x: np.ndarray) -> float:
    # Shifted by the first draw so that a constant sample returns that constant bit-exactly.
    x0 = x[0]
    return float(x0 + np.sum(x - x0) / len(x))


@dataclass(eq=False)
class StrataStats:
    """Memoized stratum means from one sampler run.

    ``xminus[i, k]`` and ``xplus[i, k]`` are ``nan`` where ``m[i, k] == 0``.
    ``draws`` optionally keeps the sampled coalitions for replay.
    """

    xminus: np.ndarray
    xplus: np.ndarray
    m: np.ndarray
    u_empty: float
    seed: int | None
    utility_id: str = ""
    evaluations: int = 0
    draws: dict | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.m.shape[0]

    def covered(self) -> np.ndarray:
        return self.m > 0

    def to_dict(self) -> dict:
        def enc(a):
            return [[None if math.isnan(v) else float(v) for v in row] for row in a]

        return {
            "xminus": enc(self.xminus),
            "xplus": enc(self.xplus),
            "m": self.m.tolist(),
            "u_empty": self.u_empty,
            "seed": self.seed,
            "utility_id": self.utility_id,
            "evaluations": self.evaluations,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StrataStats":
        def dec(a):
            return np.array([[np.nan if v is None else v for v in row] for row in a], dtype=float)

        return cls(dec(d["xminus"]), dec(d["xplus"]), np.asarray(d["m"], dtype=np.int64), d["u_empty"],
                   d["seed"], d.get("utility_id", ""), d.get("evaluations", 0))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "StrataStats":
        return cls.from_dict(json.loads(s))


def combine(xplus: np.ndarray, xminus: np.ndarray, w: WeightScheme) -> np.ndarray:
    """``psi_i = sum_k w_k C(n-1,k) (xplus[i,k] - xminus[i,k])`` over strata with ``w_k != 0``."""
    n = w.n
    coef = w.stratum_coefficients()
    psi = np.zeros(n)
    for i in range(n):
        total = 0.0
        for k in range(n):
            if coef[k] != 0.0:
                total += coef[k] * (xplus[i, k] - xminus[i, k])
        psi[i] = total
    return psi


def stratified_sample(U, w: WeightScheme, budget, seed: int, keep_draws: bool = False,
                      stream_key: tuple[int, ...] = ()):
    """Stratified marginal-improvement sampler.

    For every stratum ``(i, k)`` with ``m[i, k] > 0``, draws ``m[i, k]``
    coalitions uniformly (with replacement) from the size-``k`` coalitions
    without ``i``; each draw ``S`` contributes ``U(S)`` to ``xminus`` and
    ``U(S + i)`` to ``xplus``.  Stratum ``(i, k)`` uses its own random
    stream derived from ``(seed, *stream_key, i, k)``, so results do not
    depend on evaluation order.

    Returns
    -------
    (SemivalueVector, StrataStats)
    """
    n = U.n
    if n < 2:
        raise DomainError("the stratified sampler needs n >= 2")
    if w.n != n:
        raise DomainError(f"weights are for n={w.n} but the utility has n={n}")
    m = budget_matrix(budget, w)
    xminus = np.full((n, n), np.nan)
    xplus = np.full((n, n), np.nan)
    draws = {} if keep_draws else None
    u_empty = float(U(0))
    evaluations = 1
    for i in range(n):
        bit = 1 << i
        for k in range(n):
            mk = int(m[i, k])
            if mk == 0:
                continue
            S = draw_excluding(n, i, k, mk, stream(seed, *stream_key, i, k))
            lo = U.evaluate_many(S)
            hi = U.evaluate_many(S | bit)
            evaluations += 2 * mk
            xminus[i, k] = _mean(lo)
            xplus[i, k] = _mean(hi)
            if draws is not None:
                draws[i, k] = S
    psi = combine(xplus, xminus, w)
    stats = StrataStats(xminus, xplus, m, u_empty, seed, U.id, evaluations, draws)
    vec = SemivalueVector(psi, w.name, U.id, "sampled", budget if np.isscalar(budget) else m, seed, evaluations)
    return vec, stats


def reweigh(stats: StrataStats, w: WeightScheme) -> SemivalueVector:
    """Recombine memoized strata means under new weights; no utility evaluations."""
    if w.n != stats.n:
        raise DomainError(f"weights are for n={w.n} but the statistics have n={stats.n}")
    needed = w.w != 0
    missing = [(i, k) for i in range(stats.n) for k in np.flatnonzero(needed) if stats.m[i, k] == 0]
    if missing:
        raise CoverageError(f"no samples for strata {missing[:5]}{'...' if len(missing) > 5 else ''} "
                            f"with nonzero {w.name} weight")
    psi = combine(stats.xplus, stats.xminus, w)
    return SemivalueVector(psi, w.name, stats.utility_id, "sampled", stats.m, stats.seed, 0)


def exact_strata(U, cap: int = DEFAULT_EXACT_CAP) -> StrataStats:
    """Exact stratum means by enumeration, in the same layout the sampler returns."""
    n = U.n
    values = _table(U, cap)
    pc = popcounts(n)
    masks = np.arange(1 << n, dtype=np.int64)
    xminus = np.empty((n, n))
    xplus = np.empty((n, n))
    for i in range(n):
        bit = np.int64(1) << i
        for k in range(n):
            S = masks[((masks & bit) == 0) & (pc == k)]
            xminus[i, k] = np.mean(values[S])
            xplus[i, k] = np.mean(values[S | bit])
    m = np.array([[math.comb(n - 1, k) for k in range(n)] for _ in range(n)], dtype=np.int64)
    return StrataStats(xminus, xplus, m, float(values[0]), None, U.id, len(values))


def stratum_variances(values: np.ndarray, n: int) -> np.ndarray:
    """Population variance of ``i``'s marginal contribution within each stratum ``(i, k)``."""
    pc = popcounts(n)
    masks = np.arange(1 << n, dtype=np.int64)
    out = np.zeros((n, n))
    for i in range(n):
        bit = np.int64(1) << i
        for k in range(n):
            S = masks[((masks & bit) == 0) & (pc == k)]
            out[i, k] = np.var(values[S | bit] - values[S])
    return out


def sampler_variance(values: np.ndarray, w: WeightScheme, m: np.ndarray) -> np.ndarray:
    """Predicted variance ``sum_k C(n-1,k)^2 w_k^2 sigma2[i,k] / m[i,k]`` of each estimate."""
    n = w.n
    sig = stratum_variances(values, n)
    coef = w.stratum_coefficients()
    out = np.zeros(n)
    for i in range(n):
        for k in range(n):
            if coef[k] != 0 and m[i, k] > 0:
                out[i] += coef[k] ** 2 * sig[i, k] / m[i, k]
    return out

