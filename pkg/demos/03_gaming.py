# coding: utf-8

# # Searching for the most favorable utility
#
# Given a target group, a valuator who may pick any utility from a family
# can search for the one that flatters the group the most. Each family has
# a search that avoids re-running the valuation from scratch.

import numpy as np

from semival import Dataset, FavorabilitySpec, Logistic, Ridge, ScoreMetric, make_utility, make_weights
from semival.gaming import game_behaviors, game_cost, game_kmin
from semival.learners import Untrained
from semival.utility import build_small_behaviors

rng = np.random.default_rng(5)
X = rng.normal(size=(16, 2))
y = X @ np.array([1.0, 1.0]) + 0.4 * rng.normal(size=16)
data, test = Dataset(X[:8], y[:8]), Dataset(X[8:], y[8:])
base = make_utility(Ridge(1.0), ScoreMetric("neg-mse"), data, test, id="ridge")
w = make_weights("shapley", data.n)
agg = FavorabilitySpec("agg")
P = [1, 6]

# ## Fallback threshold
#
# One sampler run serves every threshold.

res = game_kmin(base, 3, w, agg, P, budget=10, seed=0)
print("best threshold:", res.best, " value", round(res.best_value, 4))
print("worst threshold:", res.worst, " value", round(res.worst_value, 4))
print("evaluations:", res.evaluations_used)

# ## Per-size behaviors
#
# For aggregate value, the behavior on each small coalition size can be
# chosen on its own.

options = [[], [Untrained("regression"), Ridge(10.0)], [Ridge(1.0), Ridge(0.01)]]
res = game_behaviors(build_small_behaviors(base, options), w, P, exact=True)
print("best behaviors:", res.details["best_labels"], " worst:", res.details["worst_labels"])

# ## Cost ratio of a classifier
#
# Net benefit is linear in p_t / (1 - p_t), so the extremes sit at the ends
# of the interval.

labels = (X[:, 0] + 0.3 * rng.normal(size=16) > 0).astype(float)
labels[[0, 1, 8, 9]] = [0.0, 1.0, 0.0, 1.0]
cdata = Dataset(X[:8], labels[:8], task="classification")
ctest = Dataset(X[8:], labels[8:], task="classification")
res = game_cost(Logistic(), 0.5, 0.6, w, P, cdata, ctest)
print("most favorable:", res.best, " least favorable:", res.worst)
