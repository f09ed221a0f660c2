# coding: utf-8

# # Who survives a data filter?
#
# A common cleanup drops the lowest-valued fraction of the data. Points
# near the cut can survive under one utility and be dropped under another.

import numpy as np

from semival import Dataset, Ridge, ScoreMetric, make_utility, make_weights
from semival.favorability import survivors
from semival.semivalues import exact_semivalues
from semival.utility import build_mono

rng = np.random.default_rng(0)
X = rng.normal(size=(13, 2))
y = X @ np.array([1.0, -2.0]) + 0.5 * rng.normal(size=13)
data, test = Dataset(X[:10], y[:10]), Dataset(X[10:], y[10:])
base = make_utility(Ridge(1.0), ScoreMetric("neg-mse"), data, test, id="mse")
w = make_weights("shapley", data.n)

alpha = 0.3
kept = {}
for U in build_mono(base, ["identity", "neg-sqrt"]):
    kept[U.id] = set(survivors(exact_semivalues(U, w), alpha).tolist())
    print(f"{U.id:16s} keeps", sorted(kept[U.id]))

flipped = sorted(set.union(*kept.values()) - set.intersection(*kept.values()))
print("outcome depends on the utility for:", flipped)
print("flip fraction:", len(flipped) / data.n)
