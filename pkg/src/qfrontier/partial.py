"""Partial frontiers: order-alpha, FDH, DEA-VRS and convexified order-alpha."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    Dataset,
    DomainError,
    EstimationError,
    FrontierFit,
    LevelKind,
    Method,
    QuantileLevel,
    as_level,
    dominance_matrix,
)
from .optimize import MathProgram, solve_lp

FDH_LEVEL = 1.0 - 1e-12


def _order_statistic(values: np.ndarray, tau: float) -> float:
    # smallest y with empirical CDF >= tau is the ceil(tau*N)-th order statistic;
    # the guard keeps e.g. 0.7*10 from rounding up to the 8th value
    N = values.shape[0]
    k = min(max(math.ceil(tau * N - 1e-9), 1), N)
    return float(np.partition(values, k - 1)[k - 1])


def fit_order_alpha(dataset: Dataset, tau) -> FrontierFit:
    """Order-alpha frontier evaluated at every observed input.

    The value at x_i is the ``ceil(tau * N_i)``-th smallest output among the
    ``N_i`` observations with inputs componentwise no larger than x_i.
    """
    tau = as_level(tau, LevelKind.QUANTILE)
    below = dominance_matrix(dataset).entries  # below[j, i]: x_j <= x_i
    y = dataset.outputs
    fitted = np.array([_order_statistic(y[below[:, i]], tau.value) for i in range(dataset.n)])
    method = Method.FDH if tau.value == FDH_LEVEL else Method.ORDER_ALPHA
    return FrontierFit.from_fitted(method, tau, y, fitted, extra={"inputs": dataset.inputs})


def fdh(dataset: Dataset) -> FrontierFit:
    """Free disposal hull: the largest output among dominated observations."""
    return fit_order_alpha(dataset, FDH_LEVEL)


def predict_order_alpha(dataset: Dataset, tau, x) -> float:
    """Order-alpha frontier at an arbitrary input ``x``.

    Raises
    ------
    DomainError
        If no observation has inputs componentwise below ``x``.
    """
    tau = as_level(tau, LevelKind.QUANTILE)
    x = np.asarray(x, float).reshape(-1)
    if x.shape[0] != dataset.d:
        raise ValueError(f"x has dimension {x.shape[0]}, data has {dataset.d}")
    mask = np.all(dataset.inputs <= x, axis=1)
    if not mask.any():
        raise DomainError(f"no observation is dominated by x={x.tolist()}")
    return _order_statistic(dataset.outputs[mask], tau.value)


@dataclass(frozen=True)
class DeaScore:
    """Output-oriented VRS efficiency ``theta >= 1`` and peer intensities."""

    theta: float
    intensities: np.ndarray


def _vrs_lp(points_x, points_y, x0, y0):
    # variables: [theta, lambda_1..lambda_n]; maximize theta
    n, d = points_x.shape
    c = np.zeros(n + 1)
    c[0] = -1.0
    A_ub = np.zeros((1 + d, n + 1))
    A_ub[0, 0] = y0
    A_ub[0, 1:] = -points_y
    A_ub[1:, 1:] = points_x.T
    b_ub = np.concatenate([[0.0], x0])
    A_eq = np.concatenate([[0.0], np.ones(n)])[None, :]
    lb = np.concatenate([[-np.inf], np.zeros(n)])
    return MathProgram(c, A_ub, b_ub, A_eq, [1.0], lb)


def dea_vrs_output(points_x, points_y) -> list:
    """Output-oriented DEA under variable returns to scale for every point.

    Solves, for each i, ``max theta`` subject to ``theta*y_i <= sum lambda_j y_j``,
    ``sum lambda_j x_j <= x_i``, ``sum lambda_j = 1`` and ``lambda >= 0``.
    Outputs must be strictly positive.
    """
    X = np.asarray(points_x, float)
    if X.ndim == 1:
        X = X[:, None]
    Y = np.asarray(points_y, float).reshape(-1)
    if X.shape[0] != Y.shape[0] or Y.shape[0] < 1:
        raise ValueError("points_x and points_y must have the same nonzero length")
    if np.any(Y <= 0):
        raise DomainError(f"DEA outputs must be > 0 (point {int(np.argmax(Y <= 0))} has {Y[Y <= 0][0]})")
    scores = []
    for i in range(Y.shape[0]):
        res = solve_lp(_vrs_lp(X, Y, X[i], Y[i]))
        if not res.ok:
            raise EstimationError(f"DEA LP for point {i}: {res.status.value}")
        lam = np.maximum(res.solution[1:], 0.0)
        scores.append(DeaScore(float(res.solution[0]), lam / lam.sum()))
    return scores


def vrs_frontier_value(points_x, points_y, x) -> float:
    """Height of the VRS hull of the points at input ``x``.

    Equals ``theta * y`` from :func:`dea_vrs_output` for any point (x, y)
    with y > 0, but is defined for outputs of any sign.
    """
    X = np.asarray(points_x, float)
    if X.ndim == 1:
        X = X[:, None]
    Y = np.asarray(points_y, float).reshape(-1)
    x = np.asarray(x, float).reshape(-1)
    n = Y.shape[0]
    prog = MathProgram(-Y, X.T, x, np.ones((1, n)), [1.0], np.zeros(n))
    res = solve_lp(prog)
    if res.status.value == "infeasible":
        raise DomainError(f"x={x.tolist()} lies below every point of the hull")
    if not res.ok:
        raise EstimationError(f"VRS frontier LP: {res.status.value}")
    return -res.objective_value


def fit_convexified_order_alpha(dataset: Dataset, tau) -> FrontierFit:
    """Two-step estimator: order-alpha, then DEA-VRS on the order-alpha outputs.

    Raises
    ------
    DomainError
        If an order-alpha fitted value is not strictly positive. Shift the
        outputs by a constant first; both steps commute with such a shift.
    """
    tau = as_level(tau, LevelKind.QUANTILE)
    step1 = fit_order_alpha(dataset, tau)
    if np.any(step1.fitted <= 0):
        raise DomainError("order-alpha fitted values must be > 0 for the DEA step; shift the outputs")
    scores = dea_vrs_output(dataset.inputs, step1.fitted)
    theta = np.array([s.theta for s in scores])
    fitted = theta * step1.fitted
    return FrontierFit.from_fitted(
        Method.CONVEXIFIED_ORDER_ALPHA, tau, dataset.outputs, fitted,
        extra={"inputs": dataset.inputs, "theta": theta, "order_alpha": step1.fitted},
    )


def fit_convexified_order_alpha_shifted(dataset: Dataset, tau) -> FrontierFit:
    """Convexified order-alpha for outputs of any sign.

    Adds ``c = max(0, 1 - min y)`` to the outputs, fits, and subtracts ``c``
    again. Order statistics and the VRS hull (intensities sum to one) both
    commute with the shift, so the result is exact.
    """
    shift = max(0.0, 1.0 - float(dataset.outputs.min()))
    fit = fit_convexified_order_alpha(dataset.shifted(shift), tau)
    extra = dict(fit.extra)
    extra["order_alpha"] = extra["order_alpha"] - shift
    extra["shift"] = shift
    return FrontierFit.from_fitted(fit.method, fit.level, dataset.outputs, fit.fitted - shift, extra=extra)


def violation_flag(dataset: Dataset, fit: FrontierFit, tau, threshold: float = 1e-6) -> bool:
    """True when the fit breaks either quantile-property inequality.

    With ``a`` observations more than ``threshold`` above the frontier and
    ``b`` more than ``threshold`` below it, the flag is ``a/n > 1 - tau`` or
    ``b/n > tau``.
    """
    tau = float(tau.value if isinstance(tau, QuantileLevel) else tau)
    r = dataset.outputs - fit.fitted
    n = dataset.n
    a = int(np.sum(r > threshold))
    b = int(np.sum(-r > threshold))
    eps = 1e-9 * n
    return a > (1.0 - tau) * n + eps or b > tau * n + eps
