"""
A small Monte Carlo comparison
==============================

Run one scenario with few replications and compare estimators by MSE and
bias against the true conditional quantile.
"""

from qfrontier.simulation import ScenarioConfig, expectile_win_rate, run_experiment

config = ScenarioConfig(
    n=40, d=1, sigma2=1.88, lam=1.66,
    tau_list=(0.5, 0.9), replications=20, base_seed=5,
    estimators=("CQR", "CER", "ORDER_ALPHA"), scenario_id="demo",
)
result = run_experiment(config)
print("estimator    tau    mse     bias   violations")
for cell in result.rows():
    print(f"{cell.estimator:11s} {cell.tau:4.1f} {cell.mse:7.3f} {cell.bias:7.3f} {cell.violation_rate:8.0%}")

for key, (wins, total, pct) in sorted(expectile_win_rate([result]).items(), key=str):
    print(key, f"{wins}/{total}")
