"""Run drivers behind the CLI subcommands.

Each ``cmd_*`` takes a validated :class:`~semival.config.RunConfig` and
returns a report dict; :func:`write_report` serializes it.  Reports are
deterministic given the config and the dataset bytes, apart from the
``timestamp`` field.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, random_groups
from .data import load_csv
from .errors import ConfigError, DegenerateBudgetError
from .favorability import FavorabilitySpec, favorability, range_over, survivors
from .gaming import game_behaviors, game_cost, game_discrete, game_kmin
from .learners import Learner, Logistic, Ridge, Untrained
from .oracle import oracle_argmax
from .scoring import ScoreMetric, default_regression_clip
from .semivalues import exact_semivalues, make_weights, stratified_sample
from .utility import (
    CandidateSet,
    ModelCache,
    UtilitySpec,
    build_cost,
    build_mono,
    build_small_behaviors,
    build_u0,
)

REPORT_SCHEMA = "semival-report/1"
ORACLE_TOL = 1e-12


def _base_learner(cfg, task):
    if cfg.kind == "ridge":
        return Ridge(cfg.lam)
    if cfg.kind == "logistic":
        return Logistic(cfg.steps, cfg.lr, cfg.l2)
    return Untrained(task)


def _metric(cfg, test):
    clip = cfg.clip
    if clip == "default":
        if cfg.kind not in ("neg-mse", "neg-rmse"):
            raise ConfigError("default clip bounds exist only for regression losses", path="metric.clip")
        lo, hi = default_regression_clip(test)
        clip = (lo, hi) if cfg.kind == "neg-mse" else (-math.sqrt(-lo), hi)
    return ScoreMetric(cfg.kind, cfg.p_t, cfg.transform, tuple(clip) if clip else None)


class Run:
    """Objects a config resolves to: data, base utility, weights, candidates."""

    def __init__(self, cfg: RunConfig, threads: int = 1):
        self.cfg = cfg
        self.threads = max(1, int(threads))
        d = cfg.dataset
        self.data, self.test = load_csv(d.path, d.label_column, d.test_fraction, d.seed, task=d.task)
        self.n = self.data.n
        self.task = d.task
        self.cache = ModelCache()
        self.learner = Learner(_base_learner(cfg.learner, self.task))
        self.metric = _metric(cfg.metric, self.test)
        self.base = UtilitySpec(self.learner, self.metric, self.data, self.test, cache=self.cache)
        self.w = make_weights(cfg.weights, self.n)

    @property
    def k_star(self) -> int:
        k = self.cfg.family.k_star
        k = math.floor(0.1 * self.n) if k is None else k
        if not 0 <= k < self.n:
            raise ConfigError(f"k_star must lie in [0, {self.n})", path="family.k_star")
        return k

    def behaviors(self):
        opts = [[_base_learner(o, self.task) for o in row] for row in self.cfg.family.options]
        return build_small_behaviors(self.base, opts)

    def candidates(self) -> CandidateSet:
        fam = self.cfg.family
        if fam.kind == "single":
            return CandidateSet([self.base], family="custom")
        if fam.kind == "u0":
            return build_u0(self.base, self.k_star)
        if fam.kind == "mono":
            return build_mono(self.base, fam.transforms)
        if fam.kind == "cost":
            return build_cost(self.learner, fam.a, fam.b, fam.grid, self.data, self.test, cache=self.cache)
        if fam.kind == "behaviors":
            return self.behaviors().materialize()
        members = [
            UtilitySpec(Learner(_base_learner(m.learner, self.task)), _metric(m.metric, self.test),
                        self.data, self.test, cache=self.cache)
            for m in fam.members
        ]
        return CandidateSet(members, family="custom")

    def semivalues(self, U, index: int = 0):
        cfg = self.cfg
        if cfg.mode == "exact":
            return exact_semivalues(U, self.w, cap=cfg.exact_cap)
        key = () if cfg.shared_draws else (index,)
        vec, _ = stratified_sample(U, self.w, cfg.budget, cfg.seed, stream_key=key)
        return vec

    def all_semivalues(self, cands) -> list:
        jobs = list(enumerate(cands))
        if self.threads == 1:
            return [self.semivalues(U, c) for c, U in jobs]
        with ThreadPoolExecutor(self.threads) as pool:
            return list(pool.map(lambda job: self.semivalues(job[1], job[0]), jobs))

    def groups(self) -> list[list[int]]:
        t = self.cfg.target
        out = []
        if t.indices is not None:
            out.append(sorted(set(t.indices)))
        if t.random_groups is not None:
            g = t.random_groups
            out.extend(random_groups(self.n, g.count, g.fraction, g.seed))
        return out


def _header(cfg: RunConfig, command: str) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "command": command,
        "tool_version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "config": cfg.echo(),
    }


def _summary(values) -> dict:
    v = np.asarray([x for x in values if x is not None and not math.isnan(x)], dtype=float)
    if len(v) == 0:
        return {"count": 0, "min": None, "median": None, "max": None}
    return {"count": int(len(v)), "min": float(v.min()), "median": float(np.median(v)), "max": float(v.max())}


def cmd_value(cfg: RunConfig, threads: int = 1) -> dict:
    """Semivalues of the configured single utility."""
    run = Run(cfg, threads)
    vec = run.semivalues(run.base)
    report = _header(cfg, "value")
    u_full = run.base((1 << run.n) - 1)
    u_empty = run.base(0)
    report["semivalues"] = vec.to_dict()
    report["u_full"] = u_full
    report["u_empty"] = u_empty
    report["efficiency_gap"] = float(np.sum(vec.psi) - (u_full - u_empty))
    report["fresh_evaluations"] = run.cache.trainings
    report["_csv"] = {"psi.csv": (["index", "psi"], [[i, float(p)] for i, p in enumerate(vec.psi)])}
    return report


def _favorabilities(cfg: RunConfig) -> list[FavorabilitySpec]:
    return [FavorabilitySpec(f.kind, f.alpha) for f in cfg.favorability]


def cmd_range(cfg: RunConfig, threads: int = 1) -> dict:
    """Worst-case favorability range over the candidate family, per individual and per group."""
    run = Run(cfg, threads)
    cands = run.candidates()
    vecs = run.all_semivalues(cands)
    groups = run.groups()
    report = _header(cfg, "range")
    report["candidates"] = cands.ids
    report["groups"] = groups
    errors = []
    per_fav = {}
    ind_rows = {i: [i] for i in range(run.n)}
    grp_rows = {g: [g] for g in range(len(groups))}
    fav_names = []
    for F in _favorabilities(cfg):
        name = str(F)
        fav_names.append(name)

        def values_for(P):
            vals = []
            for U, vec in zip(cands, vecs):
                try:
                    vals.append((U.id, favorability(F, vec, P)))
                except DegenerateBudgetError as exc:
                    errors.append({"favorability": name, "candidate": U.id, "error": str(exc)})
            return vals

        indiv = []
        for i in range(run.n):
            vals = values_for([i])
            r = range_over(vals)[0] if vals else None
            indiv.append(r)
            ind_rows[i].append(r)
        grp = []
        if not F.singleton_only:
            for g, P in enumerate(groups):
                vals = values_for(P)
                r = range_over(vals)[0] if vals else None
                grp.append(r)
                grp_rows[g].append(r)
        else:
            for g in grp_rows:
                grp_rows[g].append(None)
        per_fav[name] = {
            "individual": indiv,
            "individual_summary": _summary(indiv),
            "group": grp,
            "group_summary": _summary(grp),
        }
    # each error is recorded once per (favorability, candidate)
    seen, unique = set(), []
    for e in errors:
        key = (e["favorability"], e["candidate"])
        if key not in seen:
            seen.add(key)
            unique.append(e)
    report["ranges"] = per_fav
    report["errors"] = unique
    report["semivalues"] = {U.id: [float(x) for x in v.psi] for U, v in zip(cands, vecs)}
    report["evaluations_used"] = int(sum(v.evaluations for v in vecs))
    report["fresh_evaluations"] = run.cache.trainings
    report["_csv"] = {
        "range_individuals.csv": (["index"] + fav_names, [ind_rows[i] for i in range(run.n)]),
        "range_groups.csv": (["group"] + fav_names, [grp_rows[g] for g in range(len(groups))]),
    }
    return report


def _oracle_check(cands, w, F, P, result, cap) -> dict:
    best, worst, values = oracle_argmax(cands, w, F, P, cap=cap)
    lookup = dict(values)
    top = max(v for _, v in values)
    bottom = min(v for _, v in values)
    agree = (lookup.get(result.best, -math.inf) >= top - ORACLE_TOL
             and lookup.get(result.worst, math.inf) <= bottom + ORACLE_TOL)
    return {"oracle_best": best, "oracle_worst": worst, "oracle_best_value": top,
            "oracle_worst_value": bottom, "oracle_agreement": bool(agree)}


def cmd_game(cfg: RunConfig, oracle: bool = False, threads: int = 1) -> dict:
    """Dispatch to the gaming search matching the configured family."""
    run = Run(cfg, threads)
    if len(cfg.favorability) != 1:
        raise ConfigError("game needs exactly one favorability", path="favorability")
    F = _favorabilities(cfg)[0]
    groups = run.groups()
    if not groups:
        raise ConfigError("game needs a target group", path="target")
    fam = cfg.family.kind
    exact = cfg.mode == "exact"
    report = _header(cfg, "game")
    blocks = []
    for P in groups:
        if fam == "u0":
            algorithm = "kmin"
            res = game_kmin(run.base, run.k_star, run.w, F, P, budget=cfg.budget, seed=cfg.seed,
                            exact=exact, keep_psi=True, cap=cfg.exact_cap)
        elif fam == "behaviors":
            algorithm = "behaviors"
            res = game_behaviors(run.behaviors(), run.w, P, budget=cfg.budget, seed=cfg.seed,
                                 exact=exact, F=F, cap=cfg.exact_cap)
        elif fam == "cost":
            algorithm = "cost"
            if F.kind != "agg":
                raise ConfigError("the cost family pairs only with aggregate favorability",
                                  path="favorability")
            res = game_cost(run.learner, cfg.family.a, cfg.family.b, run.w, P, run.data, run.test,
                            mode=cfg.mode, budget=cfg.budget, seed=cfg.seed, F=F, cache=run.cache,
                            cap=cfg.exact_cap)
        else:
            algorithm = "discrete"
            res = game_discrete(run.candidates(), run.w, F, P, mode=cfg.mode, budget=cfg.budget,
                                seed=cfg.seed, shared_draws=cfg.shared_draws, cap=cfg.exact_cap,
                                keep_psi=True)
        block = {"target": P, "algorithm": algorithm, "result": res.to_dict()}
        if F.kind == "filt" and "psi" in res.details:
            block["survivors"] = {uid: survivors(psi, F.alpha).tolist()
                                  for uid, psi in res.details["psi"].items()}
        if oracle:
            if run.n > cfg.exact_cap:
                block["oracle"] = {"skipped": f"n={run.n} exceeds the exact cap {cfg.exact_cap}"}
            elif algorithm == "behaviors":
                cands = run.behaviors().materialize()
                block["oracle"] = _oracle_check(cands, run.w, F, P, res, cfg.exact_cap)
            else:
                block["oracle"] = _oracle_check(run.candidates(), run.w, F, P, res, cfg.exact_cap)
        blocks.append(block)
    report["games"] = blocks
    report["fresh_evaluations"] = run.cache.trainings
    return report


def cmd_filter_flips(cfg: RunConfig, threads: int = 1) -> dict:
    """Which observations' bottom-alpha filter outcome depends on the candidate chosen."""
    run = Run(cfg, threads)
    cands = run.candidates()
    vecs = run.all_semivalues(cands)
    alpha = cfg.alpha
    survive = np.zeros((len(cands), run.n), dtype=bool)
    for c, vec in enumerate(vecs):
        survive[c, survivors(vec, alpha)] = True
    flips = survive.any(axis=0) & ~survive.all(axis=0)
    report = _header(cfg, "filter-flips")
    report["alpha"] = alpha
    report["candidates"] = cands.ids
    report["survivors"] = {U.id: np.flatnonzero(survive[c]).tolist() for c, U in enumerate(cands)}
    report["flipped"] = np.flatnonzero(flips).tolist()
    report["flip_fraction"] = float(flips.mean())
    report["semivalues"] = {U.id: [float(x) for x in v.psi] for U, v in zip(cands, vecs)}
    report["_csv"] = {"flips.csv": (["index", "flipped", "survived_in"],
                                    [[i, int(flips[i]), int(survive[:, i].sum())] for i in range(run.n)])}
    return report


COMMANDS = {"value": cmd_value, "range": cmd_range, "game": cmd_game, "filter-flips": cmd_filter_flips}


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_report(report: dict, out_dir: str | Path) -> Path:
    """Write ``report.json`` plus any CSV tables into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables = report.pop("_csv", {})
    path = out / "report.json"
    path.write_text(json.dumps(report, indent=2) + "\n")
    for name, (header, rows) in tables.items():
        with (out / name).open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(header)
            for row in rows:
                wr.writerow([_cell(x) for x in row])
    return path


def strip_volatile(report: dict) -> dict:
    """Copy of ``report`` without the fields allowed to differ between reruns."""
    return {k: v for k, v in report.items() if k not in ("timestamp", "_csv")}

