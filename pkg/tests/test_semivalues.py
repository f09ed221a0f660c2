import itertools
import json
import math

import numpy as np
import pytest

from semival.data import cardinality, full_coalition
from semival.errors import CapExceededError, ConfigError, CoverageError, DomainError
from semival.semivalues import (
    StrataStats, SemivalueVector, beta_shapley_weights, exact_semivalues, exact_strata, make_weights,
    reweigh, sampler_variance, semivalues_from_table, stratified_sample,
)
from semival.utility import FunctionUtility, TableUtility


def shapley_by_permutations(values, n):
    # average marginal contribution over all orderings
    psi = np.zeros(n)
    perms = list(itertools.permutations(range(n)))
    for order in perms:
        S = 0
        for j in order:
            psi[j] += values[S | 1 << j] - values[S]
            S |= 1 << j
    return psi / len(perms)


def random_table(n, seed):
    return np.random.default_rng(seed).normal(size=1 << n)


class TestWeights:
    def test_shapley_n3(self):
        np.testing.assert_allclose(make_weights("shapley", 3).w, [1 / 3, 1 / 6, 1 / 3], rtol=1e-15)

    def test_banzhaf_n3(self):
        np.testing.assert_array_equal(make_weights("banzhaf", 3).w, [0.25, 0.25, 0.25])

    def test_loo_n5(self):
        np.testing.assert_array_equal(make_weights("loo", 5).w, [0, 0, 0, 0, 1])

    @pytest.mark.parametrize("name", ["shapley", "banzhaf", "loo"])
    @pytest.mark.parametrize("n", [1, 2, 7, 20, 40])
    def test_normalized(self, name, n):
        assert abs(make_weights(name, n).mass() - 1.0) <= 1e-12

    def test_custom(self):
        w = make_weights("custom", 4, beta_shapley_weights(4, 4.0, 1.0))
        assert abs(w.mass() - 1.0) <= 1e-12
        with pytest.raises(ConfigError):
            make_weights("custom", 3, [1.0, 1.0, 1.0])
        with pytest.raises(ConfigError):
            make_weights("custom", 3, [0.5, 0.5])

    def test_beta_one_one_is_shapley(self):
        np.testing.assert_allclose(beta_shapley_weights(6, 1.0, 1.0), make_weights("shapley", 6).w, rtol=1e-12)

    def test_unknown(self):
        with pytest.raises(ConfigError):
            make_weights("owen", 3)
        with pytest.raises(DomainError):
            make_weights("shapley", 0)


class TestExact:
    def test_additive(self):
        U = FunctionUtility(lambda S: float(cardinality(S)), 4)
        np.testing.assert_allclose(exact_semivalues(U, make_weights("shapley", 4)).psi, np.ones(4), rtol=1e-15)

    @pytest.mark.parametrize("n", [2, 5, 7])
    def test_single_player_game(self, n):
        U = FunctionUtility(lambda S: float(S >> 1 & 1), n)
        expect = np.zeros(n)
        expect[1] = 1.0
        np.testing.assert_allclose(exact_semivalues(U, make_weights("shapley", n)).psi, expect, atol=1e-15)

    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_matches_permutation_oracle(self, n):
        values = random_table(n, n)
        psi = exact_semivalues(TableUtility(values), make_weights("shapley", n)).psi
        np.testing.assert_allclose(psi, shapley_by_permutations(values, n), rtol=1e-10, atol=1e-12)

    @pytest.mark.parametrize("n", range(2, 13))
    def test_efficiency(self, n):
        values = random_table(n, 100 + n)
        psi = exact_semivalues(TableUtility(values), make_weights("shapley", n)).psi
        assert abs(psi.sum() - (values[-1] - values[0])) <= 1e-9 * (1 + abs(values[-1]))

    def test_banzhaf_oracle(self):
        n = 5
        values = random_table(n, 9)
        psi = exact_semivalues(TableUtility(values), make_weights("banzhaf", n)).psi
        for j in range(n):
            diffs = [values[S | 1 << j] - values[S] for S in range(1 << n) if not S >> j & 1]
            assert psi[j] == pytest.approx(np.mean(diffs), rel=1e-12)

    def test_loo(self):
        n = 6
        values = random_table(n, 2)
        psi = exact_semivalues(TableUtility(values), make_weights("loo", n)).psi
        full = (1 << n) - 1
        np.testing.assert_array_equal(psi, [values[full] - values[full ^ 1 << j] for j in range(n)])

    @pytest.mark.parametrize("name", ["shapley", "banzhaf", "loo"])
    def test_symmetry_and_dummy(self, name):
        n = 5
        base = random_table(3, 1)
        # players 0 and 1 are interchangeable, player 4 is a dummy
        def u(S):
            a, b = S & 1, S >> 1 & 1
            return base[(a + b) | (S >> 2 & 1) << 2] if a + b < 2 else base[3 | (S >> 2 & 1) << 2] + 0.5

        values = np.array([u(S) for S in range(1 << n)])
        psi = exact_semivalues(TableUtility(values), make_weights(name, n)).psi
        assert psi[0] == pytest.approx(psi[1], abs=1e-14)
        assert abs(psi[4]) <= 1e-14

    def test_linearity(self):
        n = 6
        a, b = random_table(n, 3), random_table(n, 4)
        w = make_weights("shapley", n)
        lhs = semivalues_from_table(2.5 * a - 0.7 * b, w)
        np.testing.assert_allclose(lhs, 2.5 * semivalues_from_table(a, w) - 0.7 * semivalues_from_table(b, w),
                                   atol=1e-9)

    def test_evaluations_and_cap(self):
        U = TableUtility(random_table(4, 0))
        assert exact_semivalues(U, make_weights("shapley", 4)).evaluations == 16
        with pytest.raises(CapExceededError):
            exact_semivalues(U, make_weights("shapley", 4), cap=3)

    def test_weight_size_mismatch(self):
        with pytest.raises(DomainError):
            exact_semivalues(TableUtility(random_table(4, 0)), make_weights("shapley", 5))


class TestSampler:
    def test_top_stratum_exact(self):
        n = 6
        values = random_table(n, 5)
        _, stats = stratified_sample(TableUtility(values), make_weights("shapley", n), 3, seed=1)
        full = (1 << n) - 1
        np.testing.assert_array_equal(stats.xminus[:, n - 1], [values[full ^ 1 << i] for i in range(n)])

    def test_loo_exact(self):
        n = 7
        values = random_table(n, 6)
        vec, stats = stratified_sample(TableUtility(values), make_weights("loo", n), 1, seed=0)
        full = (1 << n) - 1
        np.testing.assert_array_equal(vec.psi, [values[full] - values[full ^ 1 << i] for i in range(n)])
        assert np.isnan(stats.xminus[:, : n - 1]).all()

    def test_deterministic(self):
        U = TableUtility(random_table(6, 0))
        w = make_weights("banzhaf", 6)
        a, _ = stratified_sample(U, w, 5, seed=42)
        b, _ = stratified_sample(U, w, 5, seed=42)
        c, _ = stratified_sample(U, w, 5, seed=43)
        np.testing.assert_array_equal(a.psi, b.psi)
        assert not np.array_equal(a.psi, c.psi)

    def test_evaluation_count(self):
        n = 5
        vec, stats = stratified_sample(TableUtility(random_table(n, 0)), make_weights("shapley", n), 4, seed=0)
        assert vec.evaluations == stats.evaluations == 1 + 2 * 4 * n * n

    def test_budget_matrix_respected(self):
        n = 4
        m = np.zeros((n, n), dtype=int)
        m[:, n - 1] = 2
        _, stats = stratified_sample(TableUtility(random_table(n, 0)), make_weights("loo", n), m, seed=0,
                                     keep_draws=True)
        assert set(stats.draws) == {(i, n - 1) for i in range(n)}
        assert all(len(v) == 2 for v in stats.draws.values())

    def test_draws_exclude_focal(self):
        n = 7
        _, stats = stratified_sample(TableUtility(random_table(n, 0)), make_weights("shapley", n), 6, seed=3,
                                     keep_draws=True)
        for (i, k), S in stats.draws.items():
            assert all(not int(s) >> i & 1 and cardinality(int(s)) == k for s in S)

    def test_full_budget_vs_exact_strata(self):
        # xplus/xminus means from every coalition reproduce exact semivalues
        n = 6
        values = random_table(n, 8)
        w = make_weights("shapley", n)
        psi = reweigh(exact_strata(TableUtility(values)), w).psi
        np.testing.assert_allclose(psi, semivalues_from_table(values, w), atol=1e-12)

    @pytest.mark.slow
    def test_unbiased_n6(self):
        n = 6
        values = random_table(n, 11)
        U = TableUtility(values)
        w = make_weights("shapley", n)
        runs = np.array([stratified_sample(U, w, 20, seed=s)[0].psi for s in range(500)])
        exact = semivalues_from_table(values, w)
        stderr = runs.std(axis=0, ddof=1) / math.sqrt(len(runs))
        assert np.all(np.abs(runs.mean(axis=0) - exact) <= 3 * stderr)
        predicted = sampler_variance(values, w, np.full((n, n), 20))
        np.testing.assert_allclose(runs.var(axis=0, ddof=1), predicted, rtol=0.2)


class TestReweigh:
    def setup_method(self):
        self.n = 6
        self.values = random_table(self.n, 21)
        self.U = TableUtility(self.values)

    def test_same_weights_bit_exact(self):
        w = make_weights("shapley", self.n)
        vec, stats = stratified_sample(self.U, w, 7, seed=5)
        np.testing.assert_array_equal(reweigh(stats, w).psi, vec.psi)
        assert reweigh(stats, w).evaluations == 0

    def test_shapley_to_loo(self):
        _, stats = stratified_sample(self.U, make_weights("shapley", self.n), 3, seed=5)
        full = (1 << self.n) - 1
        loo = reweigh(stats, make_weights("loo", self.n)).psi
        np.testing.assert_array_equal(loo, [self.values[full] - self.values[full ^ 1 << i] for i in range(self.n)])

    def test_banzhaf_same_seed(self):
        _, stats = stratified_sample(self.U, make_weights("shapley", self.n), 4, seed=9)
        fresh, _ = stratified_sample(self.U, make_weights("banzhaf", self.n), 4, seed=9)
        np.testing.assert_array_equal(reweigh(stats, make_weights("banzhaf", self.n)).psi, fresh.psi)

    def test_coverage_error(self):
        _, stats = stratified_sample(self.U, make_weights("loo", self.n), 2, seed=0)
        with pytest.raises(CoverageError):
            reweigh(stats, make_weights("shapley", self.n))


class TestSerialization:
    def test_stats_roundtrip(self):
        n = 5
        _, stats = stratified_sample(TableUtility(random_table(n, 0), id="t"), make_weights("loo", n), 2, seed=7)
        back = StrataStats.from_json(stats.to_json())
        np.testing.assert_array_equal(back.xplus, stats.xplus)
        np.testing.assert_array_equal(back.xminus, stats.xminus)
        np.testing.assert_array_equal(back.m, stats.m)
        assert (back.u_empty, back.seed, back.utility_id) == (stats.u_empty, 7, "t")

    def test_vector_roundtrip(self):
        n = 5
        vec, _ = stratified_sample(TableUtility(random_table(n, 0), id="t"), make_weights("shapley", n), 2, seed=7)
        back = SemivalueVector.from_dict(json.loads(json.dumps(vec.to_dict())))
        np.testing.assert_array_equal(back.psi, vec.psi)
        assert (back.scheme, back.utility_id, back.mode, back.budget, back.seed) == ("shapley", "t", "sampled", 2, 7)
