"""
Partial frontiers: order-alpha, FDH and the convexified variant
===============================================================

Order-alpha takes a quantile of the outputs among observations using no
more of every input. FDH is its upper limit, and the convexified estimator
runs a DEA envelope over the order-alpha values.
"""

import numpy as np

from qfrontier import Dataset, dea_vrs_output, fdh, fit_convexified_order_alpha, fit_order_alpha

rng = np.random.default_rng(11)
x = np.sort(rng.uniform(1, 10, size=30))[:, None]
y = 1.0 + x[:, 0] ** 0.8 - np.abs(rng.standard_normal(30))
data = Dataset(x, y)

full = fdh(data)
oa = fit_order_alpha(data, 0.9)
coa = fit_convexified_order_alpha(data, 0.9)
print(" x      y      FDH    order-a  convexified")
for i in range(0, 30, 5):
    print(f"{x[i, 0]:5.2f} {y[i]:6.3f} {full.fitted[i]:6.3f} {oa.fitted[i]:8.3f} {coa.fitted[i]:9.3f}")

# The convexified values are theta * order-alpha, theta >= 1 from an
# output-oriented DEA under variable returns to scale.
scores = dea_vrs_output(x, y)
print("observations on the DEA frontier:", sum(abs(s.theta - 1) < 1e-9 for s in scores))
