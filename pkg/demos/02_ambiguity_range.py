# coding: utf-8

# # How much does the choice of utility matter?
#
# Several utilities can be equally reasonable for the same task. The range
# of a favorability measure across them shows how much a point's outcome
# depends on that choice.

import numpy as np

from semival import Dataset, FavorabilitySpec, Ridge, ScoreMetric, favorability, make_utility, make_weights
from semival.favorability import range_over
from semival.semivalues import exact_semivalues
from semival.utility import build_mono, build_u0

rng = np.random.default_rng(3)
X = rng.normal(size=(15, 2))
y = X @ np.array([0.5, 1.5]) + 0.5 * rng.normal(size=15)
data, test = Dataset(X[:9], y[:9]), Dataset(X[9:], y[9:])
base = make_utility(Ridge(1.0), ScoreMetric("neg-mse"), data, test, id="ridge|mse")
w = make_weights("shapley", data.n)

# ## Squared error or its root?
#
# Both rank models the same way, yet they hand out different payouts.

family = build_mono(base, ["identity", "neg-sqrt"])
psis = {U.id: exact_semivalues(U, w).psi for U in family}
payout = FavorabilitySpec("payout")
for i in range(data.n):
    r, best, worst = range_over([(uid, favorability(payout, psi, [i])) for uid, psi in psis.items()])
    print(f"point {i}: payout range {r:.3f}  (best under {best})")

# ## Small-coalition fallbacks
#
# Returning an untrained model below a size threshold is another defensible
# convention. Rank outcomes can move with the threshold.

family = build_u0(base, 3)
scaled = FavorabilitySpec("scaled-rank")
ranks = np.array([[favorability(scaled, exact_semivalues(U, w), [i]) for i in range(data.n)] for U in family])
print("scaled ranks per threshold (rows k_min = 0..3):")
print(np.round(ranks, 3))
print("largest rank range:", (ranks.max(axis=0) - ranks.min(axis=0)).max())
