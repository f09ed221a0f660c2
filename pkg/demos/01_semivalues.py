# coding: utf-8

# # Semivalues of training points
#
# A utility scores a coalition of training points: fit a model on the
# coalition, then score it on held-out data. A semivalue credits each point
# with a weighted average of its marginal contributions.

import numpy as np

from semival import Dataset, Ridge, ScoreMetric, make_utility, make_weights
from semival.semivalues import exact_semivalues, reweigh, stratified_sample

rng = np.random.default_rng(0)
X = rng.normal(size=(14, 2))
y = X @ np.array([1.0, -2.0]) + 0.3 * rng.normal(size=14)
data, test = Dataset(X[:8], y[:8]), Dataset(X[8:], y[8:])

U = make_utility(Ridge(1.0), ScoreMetric("neg-mse"), data, test)
print("U(empty) =", U(0), " U(all) =", U((1 << data.n) - 1))

# ## Three weight families
#
# Shapley spreads weight evenly over coalition sizes, Banzhaf evenly over
# coalitions, leave-one-out puts it all on the largest coalitions.

for name in ("shapley", "banzhaf", "loo"):
    w = make_weights(name, data.n)
    psi = exact_semivalues(U, w).psi
    print(f"{name:8s}", np.round(psi, 4))

# Shapley values add up to the total gain over the empty coalition.

psi = exact_semivalues(U, make_weights("shapley", data.n)).psi
print("sum of Shapley values:", psi.sum(), " U(all) - U(empty):", U(255) - U(0))

# ## Sampling
#
# For larger datasets the stratified sampler draws a few coalitions per
# (point, size) stratum. Its stratum means can be re-weighted for free.

w = make_weights("shapley", data.n)
estimate, stats = stratified_sample(U, w, budget=20, seed=1)
print("sampled Shapley:", np.round(estimate.psi, 4))
print("evaluations:", estimate.evaluations)

banzhaf = reweigh(stats, make_weights("banzhaf", data.n))
print("re-weighted to Banzhaf (no new evaluations):", np.round(banzhaf.psi, 4))
