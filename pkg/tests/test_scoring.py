import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from semival.data import Dataset
from semival.errors import ConfigError, DomainError
from semival.learners import Model
from semival.scoring import ScoreMetric, clip, get_transform, net_benefit, score


def const_model(task, value):
    return Model(kind="ridge", task=task, weights=np.zeros(1), intercept=value)


class TestScore:
    def test_perfect_regressor(self):
        X = np.array([[1.0], [2.0], [3.0]])
        test = Dataset(X, 2 * X[:, 0] + 1)
        m = Model("ridge", "regression", np.array([2.0]), 1.0)
        assert score(ScoreMetric("neg-mse"), m, test) == 0.0
        assert score(ScoreMetric("neg-rmse"), m, test) == 0.0

    def test_all_positive_classifier(self):
        y = np.array([1, 1, 1, 0, 0, 0, 0, 0, 0, 0], dtype=float)
        test = Dataset(np.zeros((10, 1)), y, task="classification")
        m = Model("logistic", "classification", np.zeros(1), 5.0)
        assert score(ScoreMetric("tpr"), m, test) == 1.0
        assert score(ScoreMetric("fpr"), m, test) == 1.0
        assert score(ScoreMetric("accuracy"), m, test) == pytest.approx(0.3)

    def test_rmse_identity(self, rng):
        test = Dataset(rng.normal(size=(7, 2)), rng.normal(size=7))
        for _ in range(20):
            m = Model("ridge", "regression", rng.normal(size=2), float(rng.normal()))
            mse = score(ScoreMetric("neg-mse"), m, test)
            assert score(ScoreMetric("neg-rmse"), m, test) == pytest.approx(-math.sqrt(-mse), rel=1e-15)

    def test_tpr_without_positives(self):
        test = Dataset(np.zeros((3, 1)), np.zeros(3), task="classification")
        with pytest.raises(DomainError, match="tpr"):
            score(ScoreMetric("tpr"), const_model("classification", 1.0), test)
        with pytest.raises(DomainError, match="fpr"):
            score(ScoreMetric("fpr"), const_model("classification", 1.0),
                  Dataset(np.zeros((3, 1)), np.ones(3), task="classification"))

    def test_feature_mismatch(self):
        test = Dataset(np.zeros((3, 2)), np.zeros(3))
        with pytest.raises(DomainError):
            score(ScoreMetric(), const_model("regression", 0.0), test)

    def test_clip_applied(self):
        test = Dataset(np.zeros((2, 1)), np.array([10.0, -10.0]))
        m = const_model("regression", 0.0)
        assert score(ScoreMetric("neg-mse", clip=(-5.0, 0.0)), m, test) == -5.0


class TestNetBenefit:
    @pytest.mark.parametrize("t,f,p,expected", [(0.8, 0.2, 0.5, 0.6), (0.9, 0.3, 0.6, 0.45)])
    def test_values(self, t, f, p, expected):
        assert net_benefit(t, f, p) == pytest.approx(expected, abs=1e-15)

    @given(st.floats(0, 1), st.floats(0.01, 0.99))
    def test_no_false_positives(self, t, p):
        assert net_benefit(t, 0.0, p) == t

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_domain(self, p):
        with pytest.raises(DomainError):
            net_benefit(0.5, 0.5, p)

    @given(st.floats(0, 1), st.floats(0.001, 1), st.floats(0.01, 0.98))
    def test_decreasing_in_cost_ratio(self, t, f, p):
        assert net_benefit(t, f, p + 0.01) < net_benefit(t, f, p)

    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0.01, 0.99))
    def test_affine_in_fpr(self, t, f1, f2, p):
        slope = -p / (1 - p)
        assert net_benefit(t, f2, p) - net_benefit(t, f1, p) == pytest.approx(slope * (f2 - f1), abs=1e-9)


class TestClip:
    def test_examples(self):
        assert clip(-100, -5, 0) == -5
        assert clip(-2, -5, 0) == -2
        assert clip(0.3, -1, 0) == 0

    def test_bad_bounds(self):
        with pytest.raises(ConfigError):
            ScoreMetric("neg-mse", clip=(0.0, -1.0))


class TestTransforms:
    @pytest.mark.parametrize("tid", ["identity", "neg-sqrt", "signed-log", "affine:2.0:1.0", "affine:0.5:-3"])
    def test_order_preserving(self, tid, rng):
        f = get_transform(tid)
        x = -np.abs(rng.normal(size=200)) * 3
        y = f(x)
        order = np.argsort(x, kind="stable")
        assert np.all(np.diff(y[order]) >= 0)
        i, j = rng.integers(0, 200, size=(2, 500))
        assert np.all(np.sign(y[i] - y[j]) == np.sign(x[i] - x[j]))

    def test_unknown(self):
        with pytest.raises(ConfigError):
            get_transform("square")
        with pytest.raises(ConfigError):
            get_transform("affine:-1:0")

    def test_neg_sqrt_turns_mse_into_rmse(self, rng):
        test = Dataset(rng.normal(size=(5, 1)), rng.normal(size=5))
        m = Model("ridge", "regression", np.array([0.4]), 0.1)
        assert score(ScoreMetric("neg-mse", transform="neg-sqrt"), m, test) == pytest.approx(
            score(ScoreMetric("neg-rmse"), m, test), rel=1e-15)
