"""Monte Carlo harness comparing the estimators against known quantile functions.

A :class:`ScenarioConfig` describes one cell of the experimental design.
:func:`run_experiment` draws ``replications`` datasets, fits every requested
estimator at every level, and aggregates MSE, bias and the frequency of
quantile-property violations against the true conditional quantiles.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from functools import lru_cache
from typing import Iterable, Optional

import numpy as np
from scipy import special

from .bridge import ErrorKind, ErrorSpec, calibrate_expectile, error_quantile, theoretical_expectile_of_quantile
from .convex import fit_cer, fit_cqr
from .core import Dataset, FrontierError, QuantileLevel
from .isotonic import fit_icer, fit_icqr
from .partial import fdh, fit_convexified_order_alpha_shifted, fit_order_alpha, violation_flag

STREAM_CONSTANT = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1
DESK_MAX_N = 200
FULL_SCALE_REPLICATIONS = 1000
MAX_FAIL_SHARE = 0.05

ESTIMATORS = ("CQR", "CER", "ICQR", "ICER", "ORDER_ALPHA", "COA", "FDH")
AFRIAT_ESTIMATORS = {"CQR", "CER", "ICQR", "ICER"}
_ALIASES = {
    "ORDER-ALPHA": "ORDER_ALPHA",
    "ORDERALPHA": "ORDER_ALPHA",
    "CONVEXIFIED_ORDER_ALPHA": "COA",
    "CONVEXIFIED-ORDER-ALPHA": "COA",
}
DGPS = ("cobb_douglas", "quadratic_misspec", "outlier")


class ConfigError(FrontierError, ValueError):
    """A scenario definition is malformed; ``field`` names the offending entry."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field
        self.message = message


class ScenarioAborted(FrontierError, RuntimeError):
    """More than 5% of the replications of some estimator failed."""


def canonical_estimator(name: str) -> str:
    key = str(name).strip().upper()
    key = _ALIASES.get(key, key)
    if key not in ESTIMATORS:
        raise ConfigError(f"unknown estimator {name!r}; expected one of {', '.join(ESTIMATORS)}")
    return key


def sigmas_from(sigma2: float, lam: float) -> tuple:
    """Split total variance ``sigma2`` into ``(sigma_u, sigma_v)`` given ``lam = sigma_u / sigma_v``."""
    if not (sigma2 > 0 and lam > 0):
        raise ValueError("sigma2 and lambda must be positive")
    s = math.sqrt(sigma2)
    root = math.sqrt(1.0 + lam * lam)
    return s * lam / root, s / root


@dataclass(frozen=True)
class ScenarioConfig:
    n: int
    d: int
    sigma2: float
    lam: float
    error_spec_kind: str = "composite"
    dgp: str = "cobb_douglas"
    tau_list: tuple = (0.9,)
    replications: int = 200
    base_seed: int = 0
    estimators: tuple = ("CQR", "CER")
    scenario_id: str = ""
    n_outliers: int = 3
    expectile_mapping: str = "theoretical"
    calibration_stride: int = 10

    def __post_init__(self):
        def bad(name, msg):
            raise ConfigError(f"{name}: {msg}", field=name)

        def number(name, value):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                bad(name, f"must be a number, got {value!r}")
            return value

        for name in ("n", "d", "sigma2", "lam", "replications", "n_outliers", "calibration_stride"):
            number("lambda" if name == "lam" else name, getattr(self, name))
        if isinstance(self.tau_list, (str, bytes)) or not hasattr(self.tau_list, "__iter__"):
            bad("tau_list", f"must be a list of levels, got {self.tau_list!r}")
        for t in self.tau_list:
            number("tau_list", t)
        if isinstance(self.estimators, (str, bytes)) or not hasattr(self.estimators, "__iter__"):
            bad("estimators", f"must be a list of names, got {self.estimators!r}")
        if int(self.n) != self.n or self.n < 2:
            bad("n", f"must be an integer >= 2, got {self.n!r}")
        if int(self.d) != self.d or self.d < 1:
            bad("d", f"must be an integer >= 1, got {self.d!r}")
        if not self.sigma2 > 0:
            bad("sigma2", f"must be > 0, got {self.sigma2!r}")
        if not self.lam > 0:
            bad("lambda", f"must be > 0, got {self.lam!r}")
        try:
            ErrorKind(self.error_spec_kind)
        except ValueError:
            bad("error_spec_kind", f"unknown kind {self.error_spec_kind!r}")
        if self.dgp not in DGPS:
            bad("dgp", f"unknown dgp {self.dgp!r}; expected one of {', '.join(DGPS)}")
        if self.dgp == "quadratic_misspec" and self.d != 1:
            bad("d", "quadratic_misspec is defined for d = 1 only")
        taus = tuple(float(t) for t in self.tau_list)
        if not taus or any(not 0 < t < 1 for t in taus):
            bad("tau_list", f"levels must lie in (0,1), got {list(self.tau_list)!r}")
        if int(self.replications) != self.replications or self.replications < 1:
            bad("replications", f"must be an integer >= 1, got {self.replications!r}")
        if not isinstance(self.base_seed, int) or isinstance(self.base_seed, bool):
            bad("base_seed", f"must be an integer, got {self.base_seed!r}")
        try:
            ests = tuple(canonical_estimator(e) for e in self.estimators)
        except ConfigError as exc:
            bad("estimators", exc.message)
        if not ests:
            bad("estimators", "at least one estimator is required")
        if self.expectile_mapping not in ("theoretical", "empirical"):
            bad("expectile_mapping", "must be 'theoretical' or 'empirical'")
        if self.n_outliers < 0:
            bad("n_outliers", "must be >= 0")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "replications", int(self.replications))
        object.__setattr__(self, "tau_list", taus)
        object.__setattr__(self, "estimators", ests)
        if not self.scenario_id:
            sid = f"{self.dgp}_{self.error_spec_kind}_n{self.n}_d{self.d}_s{self.sigma2:g}_l{self.lam:g}"
            object.__setattr__(self, "scenario_id", sid)

    @property
    def error_spec(self) -> ErrorSpec:
        su, sv = sigmas_from(self.sigma2, self.lam)
        return ErrorSpec(self.error_spec_kind, sigma_v=sv, sigma_u=su)

    @property
    def n_total(self) -> int:
        return self.n + (self.n_outliers if self.dgp == "outlier" else 0)

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["lambda"] = out.pop("lam")
        out["tau_list"] = list(self.tau_list)
        out["estimators"] = list(self.estimators)
        return out

    @classmethod
    def from_dict(cls, data: dict, path: str = "$") -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected an object")
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"{path}: unknown field(s) {unknown}")
        for req in ("n", "d", "sigma2", "lam"):
            if req not in data:
                raise ConfigError(f"{path}.{'lambda' if req == 'lam' else req}: required field missing")
        try:
            return cls(**data)
        except ConfigError as exc:
            if exc.field is None:
                raise ConfigError(f"{path}: {exc.message}") from None
            raise ConfigError(f"{path}.{exc.message}", field=exc.field) from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: {exc}") from None


def load_configs(path, full_scale: bool = False) -> list:
    """Read scenarios from a JSON document.

    Accepted shapes: one scenario object, a list of them, or an object with a
    ``scenarios`` list and optional ``defaults`` merged into every entry.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"$: invalid JSON ({exc})") from None
    except OSError as exc:
        raise ConfigError(f"$: cannot read {path} ({exc.strerror})") from None
    defaults = {}
    prefix = "$"
    if isinstance(doc, dict) and "scenarios" in doc:
        defaults = doc.get("defaults", {})
        if not isinstance(defaults, dict):
            raise ConfigError("$.defaults: expected an object")
        unknown = sorted(set(doc) - {"scenarios", "defaults", "description"})
        if unknown:
            raise ConfigError(f"$: unknown top-level field(s) {unknown}")
        entries = doc["scenarios"]
        prefix = "$.scenarios"
        if not isinstance(entries, list):
            raise ConfigError("$.scenarios: expected a list")
    elif isinstance(doc, list):
        entries = doc
    else:
        entries = [doc]
        prefix = None
    configs = []
    for k, entry in enumerate(entries):
        where = "$" if prefix is None else f"{prefix}[{k}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{where}: expected an object")
        cfg = ScenarioConfig.from_dict({**defaults, **entry}, where)
        if full_scale and "replications" not in entry and "replications" not in defaults:
            cfg = ScenarioConfig.from_dict({**cfg.to_dict(), "replications": FULL_SCALE_REPLICATIONS}, where)
        if not full_scale and cfg.n_total > DESK_MAX_N and AFRIAT_ESTIMATORS & set(cfg.estimators):
            raise ConfigError(
                f"{where}.n: {cfg.n_total} observations exceed the desk-scale limit of {DESK_MAX_N} "
                f"for Afriat-constrained estimators; use full-scale mode")
        configs.append(cfg)
    return configs


# -- data generation ---------------------------------------------------------

def replication_seed(base_seed: int, replication: int) -> int:
    return (int(base_seed) ^ ((int(replication) * STREAM_CONSTANT) & MASK64)) & MASK64


def _open_uniform(rng: np.random.Generator, size) -> np.ndarray:
    # 53-bit grid shifted by half a step: strictly inside (0, 1)
    k = rng.integers(0, 1 << 53, size=size, dtype=np.int64)
    return (k.astype(float) + 0.5) / float(1 << 53)


def production_function(x: np.ndarray, dgp: str = "cobb_douglas") -> np.ndarray:
    """Mean output at inputs ``x`` (n x d).

    ``cobb_douglas`` is ``prod_j x_j ** (0.8 / j)``; ``quadratic_misspec`` is
    ``x + 0.1 x^2`` (single input).
    """
    x = np.asarray(x, float)
    if x.ndim == 1:
        x = x[:, None]
    if dgp == "quadratic_misspec":
        return x[:, 0] + 0.1 * x[:, 0] ** 2
    expo = 0.8 / np.arange(1, x.shape[1] + 1)
    return np.prod(x ** expo, axis=1)


def generate(config: ScenarioConfig, replication: int):
    """Draw one dataset and its true conditional quantiles.

    Returns
    -------
    dataset : Dataset
    truth : dict
        Maps each level of ``config.tau_list`` to the n-vector of true
        quantiles ``f(x_i) + F_eps^{-1}(tau)``.
    """
    rng = np.random.Generator(np.random.PCG64(replication_seed(config.base_seed, replication)))
    n, d = config.n, config.d
    x = 1.0 + 9.0 * _open_uniform(rng, (n, d))
    if config.dgp == "outlier" and config.n_outliers:
        x_out = 90.0 + 10.0 * _open_uniform(rng, (config.n_outliers, d))
        x = np.vstack([x, x_out])
    m = x.shape[0]
    spec = config.error_spec
    v = spec.sigma_v * special.ndtri(_open_uniform(rng, m))
    u = np.abs(spec.sigma_u * special.ndtri(_open_uniform(rng, m)))
    f = production_function(x, config.dgp)
    y = f + v - u
    truth = {tau: f + _error_quantile_cached(spec, tau) for tau in config.tau_list}
    return Dataset(x, y), truth


@lru_cache(maxsize=256)
def _error_quantile_cached(spec: ErrorSpec, tau: float) -> float:
    return error_quantile(spec, tau)


@lru_cache(maxsize=256)
def _expectile_level_cached(spec: ErrorSpec, tau: float) -> float:
    return theoretical_expectile_of_quantile(spec, tau)


def mse_bias(fitted, truth) -> tuple:
    """Mean squared and mean signed deviation of ``fitted`` from ``truth``."""
    fitted = np.asarray(fitted, float)
    truth = np.asarray(truth, float)
    if fitted.shape != truth.shape:
        raise ValueError(f"length mismatch: {fitted.shape} vs {truth.shape}")
    e = fitted - truth
    return float(np.mean(e * e)), float(np.mean(e))


# -- estimation --------------------------------------------------------------

def _expectile_level(config: ScenarioConfig, dataset: Dataset, tau: float, estimator: str) -> float:
    if config.expectile_mapping == "theoretical":
        return _expectile_level_cached(config.error_spec, tau)
    cal, _ = calibrate_expectile(dataset, tau, estimator=estimator, stride=config.calibration_stride)
    return cal.selected_tau_tilde


def fit_estimator(name: str, dataset: Dataset, tau: float, config: Optional[ScenarioConfig] = None):
    """Fit one harness estimator; expectile methods are mapped to the quantile ``tau``."""
    name = canonical_estimator(name)
    if name == "CQR":
        return fit_cqr(dataset, tau)
    if name == "ICQR":
        return fit_icqr(dataset, tau)
    if name in ("CER", "ICER"):
        if config is None:
            raise ValueError("expectile estimators need a scenario config for the level mapping")
        level = QuantileLevel.expectile(_expectile_level(config, dataset, tau, name))
        return (fit_cer if name == "CER" else fit_icer)(dataset, level)
    if name == "ORDER_ALPHA":
        return fit_order_alpha(dataset, tau)
    if name == "FDH":
        return fdh(dataset)
    return fit_convexified_order_alpha_shifted(dataset, tau)


def _run_replication(config: ScenarioConfig, replication: int) -> dict:
    dataset, truth = generate(config, replication)
    out = {}
    for name in config.estimators:
        for tau in config.tau_list:
            t0 = time.perf_counter()
            try:
                fit = fit_estimator(name, dataset, tau, config)
            except FrontierError as exc:
                out[(name, tau)] = {"ok": False, "error": str(exc)}
                continue
            mse, bias = mse_bias(fit.fitted, truth[tau])
            out[(name, tau)] = {
                "ok": True,
                "mse": mse,
                "bias": bias,
                "violation": violation_flag(dataset, fit, tau),
                "below_share": float(np.sum(fit.residual_neg > 1e-6)) / dataset.n,
                "seconds": time.perf_counter() - t0,
            }
    return out


@dataclass
class CellStats:
    """Aggregates for one (estimator, level) cell; per-replication arrays hold NaN for failures."""

    estimator: str
    tau: float
    mse: float
    bias: float
    mse_se: float
    violation_rate: float
    n_fail: int
    mse_reps: np.ndarray = field(repr=False)
    bias_reps: np.ndarray = field(repr=False)
    violation_reps: np.ndarray = field(repr=False)
    below_share_mean: float = float("nan")
    seconds_mean: float = float("nan")


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    cells: dict

    def cell(self, estimator: str, tau: float) -> CellStats:
        return self.cells[(canonical_estimator(estimator), float(tau))]

    def rows(self) -> list:
        return [self.cells[(e, t)] for e in self.config.estimators for t in self.config.tau_list]


def _aggregate(config: ScenarioConfig, reps: list) -> ScenarioResult:
    cells = {}
    R = len(reps)
    for name in config.estimators:
        for tau in config.tau_list:
            recs = [r[(name, tau)] for r in reps]
            ok = np.array([rec["ok"] for rec in recs])
            n_fail = int(R - ok.sum())
            if n_fail > MAX_FAIL_SHARE * R:
                first = next(rec["error"] for rec in recs if not rec["ok"])
                raise ScenarioAborted(
                    f"{config.scenario_id}: {name} at tau={tau:g} failed in {n_fail}/{R} replications ({first})")
            mse = np.array([rec["mse"] if rec["ok"] else np.nan for rec in recs])
            bias = np.array([rec["bias"] if rec["ok"] else np.nan for rec in recs])
            viol = np.array([float(rec["violation"]) if rec["ok"] else np.nan for rec in recs])
            below = np.array([rec["below_share"] if rec["ok"] else np.nan for rec in recs])
            secs = np.array([rec["seconds"] if rec["ok"] else np.nan for rec in recs])
            k = int(ok.sum())
            se = float(np.nanstd(mse, ddof=1) / math.sqrt(k)) if k > 1 else float("nan")
            cells[(name, tau)] = CellStats(
                name, tau,
                float(np.nanmean(mse)) if k else float("nan"),
                float(np.nanmean(bias)) if k else float("nan"),
                se,
                float(np.nanmean(viol)) if k else float("nan"),
                n_fail, mse, bias, viol,
                float(np.nanmean(below)) if k else float("nan"),
                float(np.nanmean(secs)) if k else float("nan"),
            )
    return ScenarioResult(config, cells)


def run_experiment(config: ScenarioConfig, threads: int = 1) -> ScenarioResult:
    """Run every replication of ``config`` and aggregate.

    Replications are independent; with ``threads > 1`` they are spread over
    worker processes. Results are collected in replication order, so the
    output does not depend on scheduling.
    """
    idx = range(config.replications)
    if threads > 1 and config.replications > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            reps = list(pool.map(_run_replication, [config] * config.replications, idx))
    else:
        reps = [_run_replication(config, r) for r in idx]
    return _aggregate(config, reps)


# -- reporting ---------------------------------------------------------------

RESULT_COLUMNS = ("scenario_id", "estimator", "tau", "mse", "bias", "mse_se", "violation_rate", "n_fail")


def fmt(v) -> str:
    return format(float(v), ".9g")


def write_results_csv(results: Iterable[ScenarioResult], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for res in results:
            for c in res.rows():
                w.writerow([res.config.scenario_id, c.estimator, fmt(c.tau), fmt(c.mse), fmt(c.bias),
                            fmt(c.mse_se), fmt(c.violation_rate), c.n_fail])


FAMILIES = {"monotonicity": ("ICQR", "ICER"), "concavity": ("CQR", "CER")}


def expectile_win_rate(results: Iterable[ScenarioResult]) -> dict:
    """Percentage of scenarios where the expectile estimator has the lower MSE.

    Returns a dict keyed by ``(family, error_kind, tau)`` and
    ``(family, error_kind, "all")`` with values ``(wins, scenarios, percent)``.
    ``family`` is ``"monotonicity"`` (ICER vs ICQR) or ``"concavity"``
    (CER vs CQR).

    Raises
    ------
    ValueError
        If a scenario carries only one member of a pair, or nothing is paired.
    """
    tally = {}
    for res in results:
        ests = set(res.config.estimators)
        for family, (quant, expe) in FAMILIES.items():
            present = {quant, expe} & ests
            if not present:
                continue
            if len(present) == 1:
                raise ValueError(f"{res.config.scenario_id}: {family} pair is incomplete ({sorted(present)[0]} only)")
            for tau in res.config.tau_list:
                win = res.cell(expe, tau).mse < res.cell(quant, tau).mse
                for key in ((family, res.config.error_spec_kind, tau), (family, res.config.error_spec_kind, "all")):
                    w, t = tally.get(key, (0, 0))
                    tally[key] = (w + int(win), t + 1)
    if not tally:
        raise ValueError("no paired quantile/expectile results to compare")
    return {k: (w, t, 100.0 * w / t) for k, (w, t) in tally.items()}
