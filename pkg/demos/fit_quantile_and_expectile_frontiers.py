"""
Quantile and expectile frontiers under shape constraints
========================================================

Fit the four regression estimators to one simulated sample and look at the
share of observations on each side of the fitted frontier.
"""

import numpy as np

from qfrontier import Dataset, QuantileLevel, check_properties, fit_cer, fit_cqr, fit_icer, fit_icqr

rng = np.random.default_rng(7)
n = 60
x = rng.uniform(1, 10, size=(n, 1))
y = x[:, 0] ** 0.8 + 0.7 * rng.standard_normal(n) - np.abs(1.2 * rng.standard_normal(n))
data = Dataset(x, y)

# A quantile fit at level tau leaves at most a share 1 - tau strictly above
# the frontier and at most tau strictly below it.
tau = 0.9
for fit in (fit_cqr(data, tau), fit_icqr(data, tau)):
    rep = check_properties(fit)
    print(f"{fit.method.value:5s} above {rep.pos_share:.3f} (<= {1 - tau:.1f})  below {rep.neg_share:.3f} (<= {tau:.1f})")

# An expectile fit balances squared residuals instead: the negative share of
# total absolute residual equals the expectile level.
level = QuantileLevel.expectile(0.8)
for fit in (fit_cer(data, level), fit_icer(data, level)):
    rep = check_properties(fit)
    print(f"{fit.method.value:5s} residual ratio {rep.expectile_ratio:.6f} at level {level.value}")

# The concave fit is a lower envelope of hyperplanes, one per observation.
cqr = fit_cqr(data, tau)
print("hyperplanes with distinct slopes:", len(np.unique(np.round(cqr.slopes[:, 0], 6))))
