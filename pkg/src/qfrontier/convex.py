"""Convex quantile regression (CQR) and convex expectile regression (CER).

Both estimators fit one supporting hyperplane ``alpha_i + beta_i' x`` per
observation. The hyperplanes are tied together by the Afriat inequalities

    alpha_i + beta_i' x_i <= alpha_h + beta_h' x_i      for all i, h

which make the lower envelope of the hyperplanes a monotone concave
function passing through the fitted values. CQR minimizes the check loss
(an LP), CER the asymmetric squared loss (a QP).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .core import (
    Dataset,
    EstimationError,
    FrontierFit,
    LevelKind,
    Method,
    QuantileLevel,
    as_level,
)
from .optimize import MathProgram, solve

RESIDUAL_THRESHOLD = 1e-6


@dataclass(frozen=True)
class VariableLayout:
    """Column positions of the Afriat program variables."""

    n: int
    d: int

    @property
    def alpha(self) -> np.ndarray:
        return np.arange(self.n)

    @property
    def beta(self) -> np.ndarray:
        return self.n + np.arange(self.n * self.d).reshape(self.n, self.d)

    @property
    def eps_pos(self) -> np.ndarray:
        return self.n * (1 + self.d) + np.arange(self.n)

    @property
    def eps_neg(self) -> np.ndarray:
        return self.n * (2 + self.d) + np.arange(self.n)

    @property
    def size(self) -> int:
        return self.n * (self.d + 3)


def afriat_program(dataset: Dataset, level: float, quadratic: bool,
                   mask: Optional[np.ndarray] = None) -> MathProgram:
    """Assemble the CQR/CER program, keeping Afriat row (i, h) where ``mask[i, h]``.

    ``mask=None`` keeps all n^2 rows, including the vacuous i == h rows. The
    first n equality rows are the regression equations; a pair of rows for
    two observations with equal inputs is stored as one extra equality.
    """
    x, y = dataset.inputs, dataset.outputs
    n, d = x.shape
    lay = VariableLayout(n, d)
    ia, ib = lay.alpha, lay.beta

    rows = np.concatenate([ia, np.repeat(ia, d), ia, ia])
    cols = np.concatenate([ia, ib.ravel(), lay.eps_pos, lay.eps_neg])
    vals = np.concatenate([np.ones(n), x.ravel(), np.ones(n), -np.ones(n)])
    A_fit = sp.csr_matrix((vals, (rows, cols)), shape=(n, lay.size))

    keep = np.ones((n, n), bool) if mask is None else np.asarray(mask, bool).copy()
    # Observations with equal inputs and both rows present must share a fitted
    # value. The two opposite rows leave the feasible set without interior,
    # which stalls interior-point solvers, so write them as one equality.
    # Each observation is tied to the first one sharing its inputs, which keeps
    # the equalities linearly independent.
    same = np.all(x[:, None, :] == x[None, :, :], axis=2) & keep & keep.T
    np.fill_diagonal(same, False)
    root = np.where(same.any(axis=0), np.argmax(same, axis=0), ia)
    root = np.where(root < ia, root, ia)
    He = np.flatnonzero(root != ia)
    Ie = root[He]
    keep &= ~(same & (root[:, None] == root[None, :]))
    I, H = np.nonzero(keep)

    def afriat_rows(I, H):
        m = I.shape[0]
        r = np.arange(m)
        # alpha_i + beta_i'x_i - alpha_h - beta_h'x_i; the i == h entries cancel
        rows = np.concatenate([r, np.repeat(r, d), r, np.repeat(r, d)])
        cols = np.concatenate([I, ib[I].ravel(), H, ib[H].ravel()])
        vals = np.concatenate([np.ones(m), x[I].ravel(), -np.ones(m), -x[I].ravel()])
        A = sp.csr_matrix((vals, (rows, cols)), shape=(m, lay.size))
        A.eliminate_zeros()
        return A

    A_ub = afriat_rows(I, H)
    m = A_ub.shape[0]
    A_eq = sp.vstack([A_fit, afriat_rows(Ie, He)], format="csr")
    b_eq = np.concatenate([y, np.zeros(Ie.shape[0])])

    lb = np.zeros(lay.size)
    lb[ia] = -np.inf
    c = np.zeros(lay.size)
    Q = None
    if quadratic:
        q = np.zeros(lay.size)
        q[lay.eps_pos] = 2.0 * level
        q[lay.eps_neg] = 2.0 * (1.0 - level)
        Q = sp.diags(q, format="csc")
    else:
        c[lay.eps_pos] = level
        c[lay.eps_neg] = 1.0 - level
    return MathProgram(c, A_ub, np.zeros(m), A_eq, b_eq, lb, None, Q)


def build_cqr_program(dataset: Dataset, tau) -> MathProgram:
    """The CQR linear program with n(d+3) variables, n equalities and n^2 Afriat rows."""
    tau = as_level(tau, LevelKind.QUANTILE)
    return afriat_program(dataset, tau.value, quadratic=False)


def build_cer_program(dataset: Dataset, tau_tilde) -> MathProgram:
    """The CER quadratic program; same constraints as CQR."""
    tau_tilde = as_level(tau_tilde, LevelKind.EXPECTILE)
    return afriat_program(dataset, tau_tilde.value, quadratic=True)


def expectile_shift(r: np.ndarray, t: float) -> float:
    """Exact minimizer over ``delta`` of ``sum t*(r-delta)_+^2 + (1-t)*(delta-r)_+^2``."""
    s = np.sort(np.asarray(r, float))
    n = s.shape[0]
    cum = np.cumsum(s)
    k = np.arange(1, n + 1)
    below = k * s - cum
    above = (cum[-1] - cum) - (n - k) * s
    grad = (1.0 - t) * below - t * above
    j = int(np.argmax(grad >= 0.0))
    if j == 0:
        return float(s[0])
    # delta lies in [s[j-1], s[j]] where the first j residuals are below it
    lo_sum, hi_sum = cum[j - 1], cum[-1] - cum[j - 1]
    return float((t * hi_sum + (1.0 - t) * lo_sum) / (t * (n - j) + (1.0 - t) * j))


def solve_afriat(dataset: Dataset, level: QuantileLevel, method: Method,
                 mask: Optional[np.ndarray] = None) -> FrontierFit:
    quadratic = level.kind is LevelKind.EXPECTILE
    program = afriat_program(dataset, level.value, quadratic, mask)
    res = solve(program)
    if not res.ok:
        raise EstimationError(f"{method.value} at level {level.value:g}: solver returned {res.status.value}")
    lay = VariableLayout(dataset.n, dataset.d)
    z = res.solution
    alpha = z[lay.alpha]
    beta = np.maximum(z[lay.beta], 0.0)
    fitted = alpha + np.einsum("ij,ij->i", beta, dataset.inputs)
    objective = res.objective_value
    if quadratic:
        # Interior-point iterates leave eps+ and eps- both slightly positive at
        # interpolated points. A common intercept shift keeps every Afriat row
        # feasible, so finish with the exact line search along it.
        t = level.value
        delta = expectile_shift(dataset.outputs - fitted, t)
        alpha = alpha + delta
        fitted = fitted + delta
        r = dataset.outputs - fitted
        objective = float(t * np.sum(np.maximum(r, 0) ** 2) + (1 - t) * np.sum(np.maximum(-r, 0) ** 2))
    return FrontierFit.from_fitted(
        method, level, dataset.outputs, fitted, objective,
        intercepts=alpha, slopes=beta,
        extra={"inputs": dataset.inputs, "max_violation": res.max_constraint_violation,
               "afriat_rows": program.A_ub.shape[0]},
    )


def fit_cqr(dataset: Dataset, tau) -> FrontierFit:
    """Convex quantile regression at quantile ``tau``.

    Raises
    ------
    EstimationError
        If the LP solver does not report an optimal solution.
    """
    tau = as_level(tau, LevelKind.QUANTILE)
    return solve_afriat(dataset, tau, Method.CQR)


def fit_cer(dataset: Dataset, tau_tilde) -> FrontierFit:
    """Convex expectile regression at expectile ``tau_tilde``."""
    tau_tilde = as_level(tau_tilde, LevelKind.EXPECTILE)
    return solve_afriat(dataset, tau_tilde, Method.CER)


@dataclass(frozen=True)
class PropertyReport:
    """Residual-sign counts of a regression fit.

    ``expectile_ratio`` is ``sum(eps-) / (sum(eps+) + sum(eps-))`` and is
    ``None`` when the residuals are all zero up to the counting threshold.
    """

    n: int
    n_pos: int
    n_neg: int
    expectile_ratio: Optional[float]

    @property
    def pos_share(self) -> float:
        return self.n_pos / self.n

    @property
    def neg_share(self) -> float:
        return self.n_neg / self.n

    def quantile_bounds_hold(self, tau: float) -> bool:
        """Whether ``pos_share <= 1 - tau`` and ``neg_share <= tau``."""
        tau = float(tau)
        # compare counts against n*tau so that e.g. 3/10 <= 0.3 is not lost to rounding
        eps = 1e-9 * self.n
        return self.n_pos <= (1.0 - tau) * self.n + eps and self.n_neg <= tau * self.n + eps


def check_properties(fit: FrontierFit, threshold: float = RESIDUAL_THRESHOLD) -> PropertyReport:
    """Count residuals strictly above ``threshold`` and compute the expectile ratio.

    A total absolute residual at or below ``threshold`` is rounding noise of an
    interpolating fit, and the ratio is then reported as undefined.
    """
    pos, neg = fit.residual_pos, fit.residual_neg
    s_pos, s_neg = float(pos.sum()), float(neg.sum())
    ratio = None if s_pos + s_neg <= threshold else s_neg / (s_pos + s_neg)
    return PropertyReport(fit.n, int(np.sum(pos > threshold)), int(np.sum(neg > threshold)), ratio)


def predict(fit: FrontierFit, x) -> float:
    """Evaluate a regression fit at input ``x``.

    Convex fits return the lower envelope ``min_h alpha_h + beta_h' x``;
    isotonic fits return the step function of :func:`predict_step`.
    """
    if fit.intercepts is None or fit.slopes is None:
        raise ValueError(f"{fit.method.value} fits carry no hyperplanes")
    x = np.asarray(x, float).reshape(-1)
    if x.shape[0] != fit.slopes.shape[1]:
        raise ValueError(f"x has dimension {x.shape[0]}, fit has {fit.slopes.shape[1]}")
    if fit.method.is_isotonic:
        from .isotonic import step_value

        return step_value(fit.extra["inputs"], fit.fitted, x)
    return float(np.min(fit.intercepts + fit.slopes @ x))
