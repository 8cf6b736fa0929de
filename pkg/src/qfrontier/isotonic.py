"""Isotonic CQR and CER.

Same programs as :mod:`qfrontier.convex` with the Afriat row (i, h) kept
only when observation i precedes observation h in the partial order. With
the componentwise dominance order this drops concavity and keeps
monotonicity; the fitted values then define a nondecreasing step function.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .convex import solve_afriat
from .core import (
    Dataset,
    DominanceMatrix,
    FrontierFit,
    LevelKind,
    Method,
    as_level,
    dominance_matrix,
)


def _order(dataset: Dataset, P: Optional[DominanceMatrix]) -> np.ndarray:
    if P is None:
        return dominance_matrix(dataset).entries
    if not isinstance(P, DominanceMatrix):
        P = DominanceMatrix(P)
    if P.n != dataset.n:
        raise ValueError(f"dominance matrix is {P.n}x{P.n} for {dataset.n} observations")
    return P.validate().entries


def fit_icqr(dataset: Dataset, tau, P: Optional[DominanceMatrix] = None) -> FrontierFit:
    """Isotonic convex quantile regression.

    Parameters
    ----------
    dataset : Dataset
    tau : float or QuantileLevel
        Quantile level in (0, 1).
    P : DominanceMatrix, optional
        Partial order to gate the Afriat rows with. Defaults to componentwise
        dominance; a supplied matrix must be reflexive and transitive.
    """
    tau = as_level(tau, LevelKind.QUANTILE)
    return solve_afriat(dataset, tau, Method.ICQR, _order(dataset, P))


def fit_icer(dataset: Dataset, tau_tilde, P: Optional[DominanceMatrix] = None) -> FrontierFit:
    """Isotonic convex expectile regression; see :func:`fit_icqr`."""
    tau_tilde = as_level(tau_tilde, LevelKind.EXPECTILE)
    return solve_afriat(dataset, tau_tilde, Method.ICER, _order(dataset, P))


def step_value(inputs: np.ndarray, fitted: np.ndarray, x: np.ndarray) -> float:
    below = np.all(inputs <= x, axis=1)
    if not below.any():
        # nothing observed below x: floor at the lowest step
        return float(np.min(fitted))
    return float(np.max(fitted[below]))


def predict_step(fit: FrontierFit, dataset: Dataset, x) -> float:
    """Evaluate the isotonic step function at ``x``.

    Returns the largest fitted value among observations dominated by ``x``,
    or the smallest fitted value when ``x`` dominates no observation.
    """
    x = np.asarray(x, float).reshape(-1)
    if x.shape[0] != dataset.d:
        raise ValueError(f"x has dimension {x.shape[0]}, data has {dataset.d}")
    if fit.n != dataset.n:
        raise ValueError("fit and dataset have different sizes")
    return step_value(dataset.inputs, fit.fitted, x)
