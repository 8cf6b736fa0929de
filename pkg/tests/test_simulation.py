import csv
import json

import numpy as np
import pytest

import qfrontier.simulation as sim
from qfrontier.convex import fit_cqr
from qfrontier.core import EstimationError
from qfrontier.simulation import (
    ConfigError,
    ScenarioAborted,
    ScenarioConfig,
    expectile_win_rate,
    generate,
    load_configs,
    mse_bias,
    production_function,
    replication_seed,
    run_experiment,
    sigmas_from,
    write_results_csv,
)


def cfg(**kw):
    base = dict(n=20, d=1, sigma2=1.88, lam=1.66, tau_list=(0.5, 0.9), replications=4, base_seed=3,
                estimators=("CQR", "ICQR"))
    base.update(kw)
    return ScenarioConfig(**base)


def test_sigmas_from():
    assert sigmas_from(1.88, 1.66) == pytest.approx((1.174, 0.708), abs=1e-3)
    assert sigmas_from(1.63, 1.24) == pytest.approx((0.994, 0.801), abs=1e-3)
    assert sigmas_from(2.0, 1.0) == pytest.approx((1.0, 1.0), abs=1e-12)
    su, sv = sigmas_from(1.35, 0.83)
    assert su ** 2 + sv ** 2 == pytest.approx(1.35) and su / sv == pytest.approx(0.83)


def test_production_function():
    assert production_function(np.array([[4.0, 9.0]]))[0] == pytest.approx(4 ** 0.8 * 9 ** 0.4)
    assert production_function(np.array([[4.0, 9.0]]))[0] == pytest.approx(7.300, abs=1e-3)
    assert production_function(np.array([2.0]), "quadratic_misspec")[0] == pytest.approx(2.4)


def test_generate_is_deterministic_and_stream_specific():
    c = cfg()
    a, ta = generate(c, 7)
    b, tb = generate(c, 7)
    assert a.inputs.tobytes() == b.inputs.tobytes() and a.outputs.tobytes() == b.outputs.tobytes()
    assert all(ta[t].tobytes() == tb[t].tobytes() for t in c.tau_list)
    other, _ = generate(c, 8)
    assert not np.array_equal(other.outputs, a.outputs)
    assert np.all((a.inputs >= 1) & (a.inputs <= 10))


def test_seed_derivation():
    assert replication_seed(0, 0) == 0
    assert replication_seed(5, 1) == 5 ^ 0x9E3779B97F4A7C15
    assert 0 <= replication_seed(2 ** 64 - 1, 12345) < 2 ** 64


def test_truth_for_symmetric_noise_median():
    c = cfg(error_spec_kind="noise_only", d=2)
    ds, truth = generate(c, 0)
    np.testing.assert_array_equal(truth[0.5], production_function(ds.inputs))


def test_truth_offsets_match_error_quantiles():
    c = cfg(error_spec_kind="inefficiency_only")
    ds, truth = generate(c, 0)
    f = production_function(ds.inputs)
    assert np.all(truth[0.9] <= f)
    assert np.allclose(truth[0.9] - f, (truth[0.9] - f)[0])


def test_outlier_and_misspecified_designs():
    ds, truth = generate(cfg(dgp="outlier", n=30, n_outliers=3), 0)
    assert ds.n == 33 and np.all(ds.inputs[30:] >= 90) and np.all(ds.inputs[:30] <= 10)
    assert truth[0.5].shape == (33,)
    ds, _ = generate(cfg(dgp="quadratic_misspec"), 0)
    assert ds.d == 1
    with pytest.raises(ConfigError, match="d"):
        cfg(dgp="quadratic_misspec", d=2)


def test_mse_bias_examples():
    assert mse_bias([1, 2], [1, 1]) == (0.5, 0.5)
    assert mse_bias([3, 4], [3, 4]) == (0.0, 0.0)
    m, b = mse_bias(np.arange(5.0) + 0.25, np.arange(5.0))
    assert m == pytest.approx(0.0625) and b == pytest.approx(0.25)
    with pytest.raises(ValueError):
        mse_bias([1.0], [1.0, 2.0])


def test_single_replication_aggregation():
    c = cfg(replications=1, tau_list=(0.7,), estimators=("CQR",))
    res = run_experiment(c)
    ds, truth = generate(c, 0)
    m, b = mse_bias(fit_cqr(ds, 0.7).fitted, truth[0.7])
    cell = res.cell("CQR", 0.7)
    assert cell.mse == m and cell.bias == b and np.isnan(cell.mse_se)


def test_run_experiment_invariants():
    c = cfg(estimators=("CQR", "ICQR", "CER", "ICER", "ORDER_ALPHA", "COA", "FDH"), replications=3)
    r1 = run_experiment(c)
    r2 = run_experiment(c, threads=2)
    for cell in r1.rows():
        other = r2.cell(cell.estimator, cell.tau)
        assert cell.mse == other.mse and cell.bias == other.bias
        assert cell.mse >= 0
        assert np.all(cell.mse_reps >= cell.bias_reps ** 2 - 1e-12)
    for est in ("CQR", "ICQR"):
        for tau in c.tau_list:
            assert r1.cell(est, tau).violation_rate == 0.0


def test_failures_are_counted_and_abort(monkeypatch):
    real = sim.fit_estimator
    calls = {"n": 0}

    def flaky(name, dataset, tau, config=None):
        calls["n"] += 1
        if calls["n"] == 1:
            raise EstimationError("synthetic failure")
        return real(name, dataset, tau, config)

    monkeypatch.setattr(sim, "fit_estimator", flaky)
    res = run_experiment(cfg(replications=25, tau_list=(0.5,), estimators=("ORDER_ALPHA",)))
    cell = res.cell("ORDER_ALPHA", 0.5)
    assert cell.n_fail == 1 and np.isnan(cell.mse_reps[0]) and np.isfinite(cell.mse)
    calls["n"] = 0
    with pytest.raises(ScenarioAborted, match="1/4"):
        run_experiment(cfg(replications=4, tau_list=(0.5,), estimators=("ORDER_ALPHA",)))


def test_config_validation_messages():
    with pytest.raises(ConfigError, match="n:"):
        cfg(n=1)
    with pytest.raises(ConfigError, match="lambda"):
        cfg(lam=0.0)
    with pytest.raises(ConfigError, match="tau_list"):
        cfg(tau_list=(0.5, 1.0))
    with pytest.raises(ConfigError, match="estimators"):
        cfg(estimators=("CQR", "nope"))
    with pytest.raises(ConfigError, match="error_spec_kind"):
        cfg(error_spec_kind="laplace")
    assert cfg(estimators=("order-alpha", "coa")).estimators == ("ORDER_ALPHA", "COA")


def test_load_configs_shapes(tmp_path):
    one = {"n": 10, "d": 1, "sigma2": 1.0, "lambda": 1.0}
    p = tmp_path / "a.json"
    p.write_text(json.dumps(one))
    assert len(load_configs(p)) == 1
    p.write_text(json.dumps([one, {**one, "n": 12}]))
    assert [c.n for c in load_configs(p)] == [10, 12]
    p.write_text(json.dumps({"defaults": {"replications": 7}, "scenarios": [one]}))
    c = load_configs(p)[0]
    assert c.replications == 7 and c.to_dict()["lambda"] == 1.0
    p.write_text(json.dumps({"scenarios": [one, {**one, "n": "x"}]}))
    with pytest.raises(ConfigError, match=r"\$\.scenarios\[1\]\.n"):
        load_configs(p)


def test_desk_scale_cap_and_full_scale(tmp_path):
    big = {"n": 500, "d": 1, "sigma2": 1.0, "lambda": 1.0, "estimators": ["CQR"]}
    p = tmp_path / "a.json"
    p.write_text(json.dumps({"scenarios": [big]}))
    with pytest.raises(ConfigError, match="desk-scale"):
        load_configs(p)
    c = load_configs(p, full_scale=True)[0]
    assert c.replications == sim.FULL_SCALE_REPLICATIONS
    # partial-frontier scenarios are cheap and exempt from the cap
    p.write_text(json.dumps({**big, "estimators": ["ORDER_ALPHA"]}))
    assert load_configs(p)[0].n == 500


class FakeCell:
    def __init__(self, mse):
        self.mse = mse


class FakeResult:
    def __init__(self, kind, taus, mses, ests=("CQR", "CER")):
        self.config = cfg(error_spec_kind=kind, tau_list=taus, estimators=ests)
        self.mses = mses

    def cell(self, est, tau):
        return FakeCell(self.mses[(est, tau)])


def test_expectile_win_rate():
    a = FakeResult("composite", (0.5,), {("CQR", 0.5): 1.0, ("CER", 0.5): 0.5})
    b = FakeResult("composite", (0.5,), {("CQR", 0.5): 1.0, ("CER", 0.5): 2.0})
    table = expectile_win_rate([a, a])
    assert table[("concavity", "composite", 0.5)] == (2, 2, 100.0)
    assert expectile_win_rate([a, b])[("concavity", "composite", "all")] == (1, 2, 50.0)
    with pytest.raises(ValueError, match="no paired"):
        expectile_win_rate([])
    with pytest.raises(ValueError, match="incomplete"):
        expectile_win_rate([FakeResult("composite", (0.5,), {}, ests=("CQR",))])


def test_results_csv(tmp_path):
    res = run_experiment(cfg(replications=2, estimators=("ORDER_ALPHA",)))
    path = tmp_path / "r.csv"
    write_results_csv([res], path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == list(sim.RESULT_COLUMNS)
    assert len(rows) == 3
    assert rows[1][1] == "ORDER_ALPHA" and rows[1][2] == "0.5"
    assert rows[1][3] == format(res.cell("ORDER_ALPHA", 0.5).mse, ".9g")


def test_empirical_mapping_runs():
    c = cfg(n=15, replications=1, tau_list=(0.5,), estimators=("CER",), expectile_mapping="empirical",
            error_spec_kind="noise_only")
    cell = run_experiment(c).cell("CER", 0.5)
    assert cell.n_fail == 0 and np.isfinite(cell.mse)
