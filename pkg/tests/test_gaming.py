import math

import numpy as np
import pytest

from semival.data import cardinality, coalition
from semival.errors import ConfigError, CoverageError
from semival.favorability import FavorabilitySpec, favorability
from semival.learners import Logistic
from semival.oracle import brute_force_semivalues, oracle_argmax
from semival.semivalues import make_weights, sampler_variance, semivalues_from_table, stratified_sample
from semival.gaming import (
    agg_coefficient, game_behaviors, game_cost, game_discrete, game_kmin, kmin_semivalues,
)
from semival.utility import (
    CandidateSet, FallbackUtility, TableUtility, build_cost, build_small_behaviors, build_u0,
)

from conftest import classification_pair

AGG = FavorabilitySpec("agg")


def random_candidates(n, count, seed):
    r = np.random.default_rng(seed)
    return CandidateSet([TableUtility(r.normal(size=1 << n), id=f"u{c}") for c in range(count)])


def member_bonus(n, j):
    return np.array([float(S >> j & 1) for S in range(1 << n)])


class TestDiscrete:
    def test_singleton(self):
        res = game_discrete(random_candidates(4, 1, 0), make_weights("shapley", 4), AGG, [1])
        assert res.best == res.worst == "u0"
        assert res.range == 0.0

    @pytest.mark.parametrize("trial", range(12))
    def test_matches_oracle(self, trial):
        r = np.random.default_rng(trial)
        n = int(r.integers(3, 9))
        cands = random_candidates(n, int(r.integers(2, 6)), 1000 + trial)
        w = make_weights(["shapley", "banzhaf", "loo"][trial % 3], n)
        specs = [AGG, FavorabilitySpec("payout"), FavorabilitySpec("filt", alpha=0.3),
                 FavorabilitySpec("scaled-rank")]
        F = specs[trial % 4]
        P = [0] if F.kind == "scaled-rank" else sorted(r.choice(n, size=2, replace=False).tolist())
        res = game_discrete(cands, w, F, P)
        best, worst, values = oracle_argmax(cands, w, F, P)
        assert (res.best, res.worst) == (best, worst)
        assert res.best_value == pytest.approx(max(v for _, v in values), abs=1e-12)

    def test_exact_accounting(self):
        cands = random_candidates(6, 4, 0)
        res = game_discrete(cands, make_weights("shapley", 6), AGG, [0])
        assert res.evaluations_used == 4 * 2 ** 6

    def test_sampled_accounting_and_seeds(self):
        n = 5
        cands = random_candidates(n, 3, 0)
        w = make_weights("shapley", n)
        res = game_discrete(cands, w, AGG, [0], mode="sampled", budget=4, seed=11, keep_psi=True)
        assert res.evaluations_used == 3 * (1 + 2 * 4 * n * n)
        own, _ = stratified_sample(cands[1], w, 4, 11, stream_key=(1,))
        np.testing.assert_array_equal(res.details["psi"]["u1"], own.psi)
        shared = game_discrete(cands, w, AGG, [0], mode="sampled", budget=4, seed=11, keep_psi=True,
                               shared_draws=True)
        plain, _ = stratified_sample(cands[1], w, 4, 11)
        np.testing.assert_array_equal(shared.details["psi"]["u1"], plain.psi)

    def test_sampled_recovers_oracle(self):
        n, B = 8, 50
        r = np.random.default_rng(3)
        base = r.normal(size=1 << n)
        w = make_weights("shapley", n)
        sd = math.sqrt(sampler_variance(base, w, np.full((n, n), B))[0])
        bonus = member_bonus(n, 0)
        # bumping only coalitions holding player 0 shifts psi_0 by exactly the bump
        cands = CandidateSet([TableUtility(base + c * 5 * sd * bonus, id=f"c{c}") for c in (0, 2, 1)])
        best, _, _ = oracle_argmax(cands, w, AGG, [0])
        assert best == "c2"
        hits = sum(game_discrete(cands, w, AGG, [0], mode="sampled", budget=B, seed=s).best == best
                   for s in range(100))
        assert hits >= 95

    def test_failure_names_candidate(self):
        cands = CandidateSet([TableUtility(np.zeros(8), id="flat")])
        with pytest.raises(Exception, match="flat"):
            game_discrete(cands, make_weights("shapley", 3), FavorabilitySpec("payout"), [0])

    def test_mode_validation(self):
        with pytest.raises(ConfigError):
            game_discrete(random_candidates(3, 2, 0), make_weights("shapley", 3), AGG, [0], mode="sampled")


class TestKmin:
    def setup_method(self):
        self.n = 8
        self.base = TableUtility(np.random.default_rng(7).normal(size=1 << self.n), id="base")
        self.w = make_weights("shapley", self.n)

    def test_kmin_zero_is_base(self):
        vec, stats = stratified_sample(self.base, self.w, 6, seed=4)
        np.testing.assert_array_equal(kmin_semivalues(stats, self.w, 0), vec.psi)

    @pytest.mark.parametrize("k_min", range(1, 5))
    def test_replay_bit_exact(self, k_min):
        _, stats = stratified_sample(self.base, self.w, 6, seed=4)
        replay, _ = stratified_sample(FallbackUtility(self.base, k_min), self.w, 6, seed=4)
        np.testing.assert_array_equal(kmin_semivalues(stats, self.w, k_min), replay.psi)

    def test_exact_matches_discrete(self):
        for F, P in [(AGG, [0, 3]), (FavorabilitySpec("scaled-rank"), [2]), (FavorabilitySpec("payout"), [5])]:
            res = game_kmin(self.base, 3, self.w, F, P, exact=True)
            ref = game_discrete(build_u0(self.base, 3), self.w, F, P)
            assert (res.best, res.worst) == (ref.best, ref.worst)
            assert res.best_value == pytest.approx(ref.best_value, abs=1e-10)

    def test_one_sampler_run(self):
        for k_star in (0, 2, 5):
            res = game_kmin(self.base, k_star, self.w, AGG, [0], budget=3, seed=0)
            assert res.evaluations_used == 1 + 2 * 3 * self.n * self.n
            assert len(res.candidates) == k_star + 1

    def test_coverage(self):
        m = np.full((self.n, self.n), 2)
        m[:, 0] = 0
        with pytest.raises(CoverageError):
            game_kmin(self.base, 2, self.w, AGG, [0], budget=m, seed=0)
        # sweeps starting at k_min >= 2 never read stratum 0
        _, stats = stratified_sample(self.base, self.w, m, seed=0)
        kmin_semivalues(stats, self.w, 2)


class TestAggCoefficient:
    @pytest.mark.parametrize("name", ["shapley", "banzhaf"])
    def test_finite_perturbation(self, name):
        n, P = 6, (1, 4)
        w = make_weights(name, n)
        r = np.random.default_rng(0)
        values = r.normal(size=1 << n)
        F0 = semivalues_from_table(values, w)[list(P)].sum()
        delta = 1e-3
        for S in r.choice(1 << n, size=25, replace=False):
            S = int(S)
            k, l = cardinality(S), cardinality(S & coalition(P))
            bumped = values.copy()
            bumped[S] += delta
            F1 = semivalues_from_table(bumped, w)[list(P)].sum()
            assert (F1 - F0) / delta == pytest.approx(agg_coefficient(w, len(P), k, l), abs=1e-9)

    def test_singleton_k1(self):
        w = make_weights("shapley", 5)
        assert agg_coefficient(w, 1, 1, 1) == w.w[0]


def table_family(n, k_star, n_opts, seed):
    r = np.random.default_rng(seed)
    base = TableUtility(r.normal(size=1 << n), id="base")
    options = [[TableUtility(r.normal(size=1 << n), id=f"o{k}{b}") for b in range(n_opts)] for k in range(k_star)]
    return build_small_behaviors(base, options)


class TestBehaviors:
    def test_single_option(self):
        base = TableUtility(np.random.default_rng(0).normal(size=1 << 5), id="base")
        fam = build_small_behaviors(base, [[base], [base]])
        res = game_behaviors(fam, make_weights("shapley", 5), [0], exact=True)
        assert res.best == res.worst == "base|b=00"

    @pytest.mark.parametrize("seed", range(5))
    def test_exact_matches_oracle(self, seed):
        n, P = 8, [2, 5]
        fam = table_family(n, 3, 2, seed)
        w = make_weights("shapley", n)
        res = game_behaviors(fam, w, P, exact=True)
        best, worst, values = oracle_argmax(fam.materialize(), w, AGG, P)
        assert (res.best, res.worst) == (best, worst)
        vals = dict(values)
        assert res.range == pytest.approx(vals[best] - vals[worst], abs=1e-10)

    def test_per_cardinality_independence(self):
        n, P = 7, [0]
        fam = table_family(n, 3, 3, 1)
        w = make_weights("banzhaf", n)
        ref = game_behaviors(fam, w, P, exact=True).details["best_labels"]
        r = np.random.default_rng(9)
        for _ in range(3):
            options = [list(o) for o in fam.options]
            options[0] = [TableUtility(r.normal(size=1 << n), id=f"x{b}") for b in range(2)]
            options[2] = options[2][::-1]
            got = game_behaviors(build_small_behaviors(fam.base, options), w, P, exact=True).details["best_labels"]
            assert got[1] == ref[1]
            assert got[2] == len(options[2]) - 1 - ref[2]

    def test_sampled_converges(self):
        n, P = 8, [2, 5]
        fam = table_family(n, 3, 2, 2)
        w = make_weights("shapley", n)
        exact = game_behaviors(fam, w, P, exact=True)
        res = game_behaviors(fam, w, P, budget=[1, 200, 200], seed=0)
        per_k = exact.details["per_k"]
        for k, got in enumerate(res.details["best_labels"]):
            s = per_k[k]["scores"]
            if abs(s[0] - s[1]) > 0.05 * max(abs(s[0]), abs(s[1])):
                assert got == per_k[k]["best"]

    def test_rejects_other_favorability(self):
        with pytest.raises(ConfigError):
            game_behaviors(table_family(4, 2, 2, 0), make_weights("shapley", 4), [0], exact=True,
                           F=FavorabilitySpec("payout"))


class TestCost:
    def setup_method(self):
        self.data, self.test = classification_pair(n=7, n_test=12, seed=2)
        self.w = make_weights("shapley", 7)

    @pytest.mark.parametrize("P", [[0], [1, 3], [2, 4, 6]])
    def test_endpoints_beat_grid(self, P):
        res = game_cost(Logistic(), 0.3, 0.7, self.w, P, self.data, self.test)
        grid = game_discrete(build_cost(Logistic(), 0.3, 0.7, 101, self.data, self.test), self.w, AGG, P)
        assert res.best_value == pytest.approx(grid.best_value, abs=1e-12)
        assert res.worst_value == pytest.approx(grid.worst_value, abs=1e-12)
        assert res.best == grid.best or math.isclose(res.best_value, res.worst_value, abs_tol=1e-12)

    def test_sign_rule(self):
        res = game_cost(Logistic(), 0.3, 0.7, self.w, [0, 1, 2, 3, 4, 5, 6], self.data, self.test)
        # summing over all players gives FPR(D) - FPR(empty) by efficiency
        total_f = sum(res.details["psi_fpr"])
        expect = "p_t=0.3" if total_f > 0 else "p_t=0.7"
        assert expect in res.best

    def test_fpr_free_direction(self):
        base = game_cost(Logistic(), 0.3, 0.7, self.w, [0], self.data, self.test)
        psi_f = np.array(base.details["psi_fpr"])
        j = int(np.argmax(np.abs(psi_f)))
        coef = np.zeros(7)
        coef[j] = 1.0
        i = (j + 1) % 7
        coef[i] = 1.0
        coef[j] = -psi_f[i] / psi_f[j]
        res = game_cost(Logistic(), 0.3, 0.7, self.w, [0], self.data, self.test, F=coef)
        assert res.range == pytest.approx(0.0, abs=1e-12)
        endpoints = [c["id"] for c in res.candidates]
        assert len(endpoints) == 2 and {res.best, res.worst} <= set(endpoints)

    def test_matches_brute_force(self):
        res = game_cost(Logistic(), 0.3, 0.7, self.w, [1, 2], self.data, self.test)
        fam = build_cost(Logistic(), 0.3, 0.7, 2, self.data, self.test)
        vals = [sum(brute_force_semivalues(U, self.w.w)[i] for i in (1, 2)) for U in fam]
        assert res.best_value == pytest.approx(max(vals), abs=1e-12)

    def test_model_sharing(self):
        res = game_cost(Logistic(), 0.3, 0.7, self.w, [0], self.data, self.test)
        assert res.evaluations_used == 2 * 2 ** 7
        assert res.fresh_evaluations == 2 ** 7

    def test_sampled(self):
        res = game_cost(Logistic(), 0.3, 0.7, self.w, [0], self.data, self.test, mode="sampled", budget=2, seed=3)
        assert res.evaluations_used == 2 * (1 + 2 * 2 * 49)
        assert res.seed == 3
