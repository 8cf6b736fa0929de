"""
Translating quantile levels into expectile levels
=================================================

For a known error law the expectile level with the same location as a
quantile follows from partial moments. From data, it is read off a grid of
expectile fits.
"""

import numpy as np

from qfrontier import Dataset, ErrorSpec, calibrate_expectile
from qfrontier.bridge import error_quantile, theoretical_expectile_of_quantile, theoretical_quantile_of_expectile

spec = ErrorSpec("composite", sigma_v=0.78, sigma_u=1.13)
for tau in (0.1, 0.5, 0.9):
    t = theoretical_expectile_of_quantile(spec, tau)
    back = theoretical_quantile_of_expectile(spec, t)
    print(f"tau {tau:.1f}: quantile {error_quantile(spec, tau):+.4f}, expectile level {t:.4f}, round trip {back:.6f}")

# Empirical route on a sample: the expectile level that puts 90% of the
# observations below the fitted frontier.
rng = np.random.default_rng(3)
x = rng.uniform(1, 10, size=(40, 1))
y = x[:, 0] ** 0.8 + 0.78 * rng.standard_normal(40) - np.abs(1.13 * rng.standard_normal(40))
data = Dataset(x, y)
for method in ("efron_count", "waltrup_interpolate"):
    cal, fit = calibrate_expectile(data, 0.9, method=method, stride=10)
    print(f"{method:20s} selected level {cal.selected_tau_tilde:.4f}")
