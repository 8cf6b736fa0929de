"""Linear and convex-quadratic program container and solvers.

Programs are stored in a split standard form::

    minimize    1/2 x'Qx + c'x
    subject to  A_ub x <= b_ub
                A_eq x  = b_eq
                lb <= x <= ub

LPs go to the HiGHS dual simplex shipped with scipy (vertex solutions, which
keeps the residual split of the quantile programs exactly complementary);
QPs go to the Clarabel interior-point solver.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

FEAS_TOL = 1e-7
OPT_TOL = 1e-6


class SolveStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


def _csr(a, ncols):
    if a is None:
        return sp.csr_matrix((0, ncols))
    a = sp.csr_matrix(a, dtype=float)
    if a.shape[1] != ncols:
        raise ValueError(f"constraint matrix has {a.shape[1]} columns, expected {ncols}")
    return a


@dataclass(frozen=True)
class MathProgram:
    """Immutable LP/QP in split standard form (see module docstring).

    ``Q`` is ``None`` for linear programs. Row blocks may be any scipy
    sparse matrix or dense array; they are stored as CSR.
    """

    c: np.ndarray
    A_ub: sp.csr_matrix = None
    b_ub: np.ndarray = None
    A_eq: sp.csr_matrix = None
    b_eq: np.ndarray = None
    lb: np.ndarray = None
    ub: np.ndarray = None
    Q: Optional[sp.csc_matrix] = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        m = c.shape[0]
        A_ub = _csr(self.A_ub, m)
        A_eq = _csr(self.A_eq, m)
        b_ub = np.zeros(0) if self.b_ub is None else np.asarray(self.b_ub, float).reshape(-1)
        b_eq = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, float).reshape(-1)
        if b_ub.shape[0] != A_ub.shape[0] or b_eq.shape[0] != A_eq.shape[0]:
            raise ValueError("right-hand side length does not match constraint rows")
        lb = np.full(m, -np.inf) if self.lb is None else np.broadcast_to(np.asarray(self.lb, float), (m,)).copy()
        ub = np.full(m, np.inf) if self.ub is None else np.broadcast_to(np.asarray(self.ub, float), (m,)).copy()
        for arr in (c, b_ub, b_eq, A_ub.data, A_eq.data):
            if not np.all(np.isfinite(arr)):
                raise ValueError("program coefficients must be finite")
        Q = None
        if self.Q is not None:
            Q = sp.csc_matrix(self.Q, dtype=float)
            if Q.shape != (m, m):
                raise ValueError(f"Q has shape {Q.shape}, expected {(m, m)}")
            if abs(Q - Q.T).max() > 1e-12 * max(1.0, abs(Q).max()):
                raise ValueError("Q must be symmetric")
        for arr in (c, b_ub, b_eq, lb, ub):
            arr.setflags(write=False)
        for k, v in dict(c=c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, lb=lb, ub=ub, Q=Q).items():
            object.__setattr__(self, k, v)

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    @property
    def is_quadratic(self) -> bool:
        return self.Q is not None

    @classmethod
    def from_rows(cls, c, rows: Sequence = (), bounds=None, Q=None) -> "MathProgram":
        """Build from a list of ``(row, sense, rhs)`` with sense in ``<=, =, >=``.

        ``bounds`` is a list of ``(lo, hi)`` pairs, ``None`` meaning infinite.
        """
        c = np.asarray(c, float)
        ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
        for a, sense, b in rows:
            a = np.asarray(a, float)
            if sense in ("<=", "le"):
                ub_rows.append(a)
                ub_rhs.append(b)
            elif sense in (">=", "ge"):
                ub_rows.append(-a)
                ub_rhs.append(-b)
            elif sense in ("=", "==", "eq"):
                eq_rows.append(a)
                eq_rhs.append(b)
            else:
                raise ValueError(f"unknown constraint sense {sense!r}")
        m = c.shape[0]
        lb = ub = None
        if bounds is not None:
            lb = np.array([-np.inf if lo is None else lo for lo, _ in bounds], float)
            ub = np.array([np.inf if hi is None else hi for _, hi in bounds], float)
        return cls(
            c,
            np.array(ub_rows).reshape(-1, m) if ub_rows else None,
            np.array(ub_rhs) if ub_rows else None,
            np.array(eq_rows).reshape(-1, m) if eq_rows else None,
            np.array(eq_rhs) if eq_rows else None,
            lb,
            ub,
            Q,
        )

    def objective(self, x) -> float:
        x = np.asarray(x, float)
        val = float(self.c @ x)
        if self.Q is not None:
            val += 0.5 * float(x @ (self.Q @ x))
        return val

    def max_violation(self, x) -> float:
        """Largest constraint violation, each row scaled by its Euclidean norm."""
        x = np.asarray(x, float)
        worst = 0.0
        for A, b, eq in ((self.A_ub, self.b_ub, False), (self.A_eq, self.b_eq, True)):
            if A.shape[0] == 0:
                continue
            r = A @ x - b
            r = np.abs(r) if eq else np.maximum(r, 0.0)
            norms = np.sqrt(np.asarray(A.multiply(A).sum(axis=1)).ravel())
            worst = max(worst, float(np.max(r / np.maximum(norms, 1.0))))
        with np.errstate(invalid="ignore"):
            worst = max(worst, float(np.max(np.maximum(self.lb - x, 0.0), initial=0.0)))
            worst = max(worst, float(np.max(np.maximum(x - self.ub, 0.0), initial=0.0)))
        return worst


@dataclass(frozen=True)
class SolveResult:
    status: SolveStatus
    solution: np.ndarray
    objective_value: float
    max_constraint_violation: float
    duals: Optional[dict] = None
    kkt_residual: Optional[float] = None

    @property
    def ok(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


_LINPROG_STATUS = {
    0: SolveStatus.OPTIMAL,
    1: SolveStatus.ITERATION_LIMIT,
    2: SolveStatus.INFEASIBLE,
    3: SolveStatus.UNBOUNDED,
    4: SolveStatus.ITERATION_LIMIT,
}


def solve_lp(program: MathProgram) -> SolveResult:
    """Solve a linear program with HiGHS dual simplex.

    Infeasibility and unboundedness are reported through ``status``.
    Duals follow scipy's sign convention (``marginals``).
    """
    if program.is_quadratic:
        raise ValueError("solve_lp received a program with a quadratic objective")
    p = program
    bounds = np.column_stack([p.lb, p.ub])
    bounds = [(None if np.isinf(lo) else lo, None if np.isinf(hi) else hi) for lo, hi in bounds]
    # Contradictory bounds make HiGHS refuse the model instead of reporting infeasibility.
    if np.any(p.lb > p.ub):
        return SolveResult(SolveStatus.INFEASIBLE, np.full(p.n_vars, np.nan), np.nan, np.inf)
    res = linprog(
        p.c,
        A_ub=p.A_ub if p.A_ub.shape[0] else None,
        b_ub=p.b_ub if p.A_ub.shape[0] else None,
        A_eq=p.A_eq if p.A_eq.shape[0] else None,
        b_eq=p.b_eq if p.A_eq.shape[0] else None,
        bounds=bounds,
        method="highs-ds",
    )
    status = _LINPROG_STATUS.get(res.status, SolveStatus.ITERATION_LIMIT)
    if res.x is None:
        return SolveResult(status, np.full(p.n_vars, np.nan), np.nan, np.inf)
    x = np.asarray(res.x, float)
    duals = None
    if status is SolveStatus.OPTIMAL:
        duals = {
            "ineq": np.asarray(res.ineqlin.marginals) if p.A_ub.shape[0] else np.zeros(0),
            "eq": np.asarray(res.eqlin.marginals) if p.A_eq.shape[0] else np.zeros(0),
            "lower": np.asarray(res.lower.marginals),
            "upper": np.asarray(res.upper.marginals),
        }
    viol = p.max_violation(x)
    if status is SolveStatus.OPTIMAL and viol > FEAS_TOL:
        status = SolveStatus.ITERATION_LIMIT
    return SolveResult(status, x, float(res.fun), viol, duals)


def _clarabel_status(name: str) -> SolveStatus:
    if name in ("Solved", "AlmostSolved"):
        return SolveStatus.OPTIMAL
    if name in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        return SolveStatus.INFEASIBLE
    if name in ("DualInfeasible", "AlmostDualInfeasible"):
        return SolveStatus.UNBOUNDED
    return SolveStatus.ITERATION_LIMIT


def solve_qp(program: MathProgram, tol: float = 1e-10, max_iter: int = 200) -> SolveResult:
    """Solve a convex QP with Clarabel.

    ``kkt_residual`` is the infinity norm of the stationarity residual
    ``Qx + c + A'z`` together with the complementarity products.
    """
    import clarabel

    p = program
    if p.Q is None:
        raise ValueError("solve_qp requires a quadratic objective")
    m = p.n_vars
    if np.any(p.lb > p.ub):
        return SolveResult(SolveStatus.INFEASIBLE, np.full(m, np.nan), np.nan, np.inf)
    # Empty rows (such as the vacuous self-comparisons of the Afriat system)
    # only add degenerate slack pairs to the interior-point iteration.
    keep = np.diff(p.A_ub.indptr) > 0
    if np.any(p.b_ub[~keep] < -FEAS_TOL):
        return SolveResult(SolveStatus.INFEASIBLE, np.full(m, np.nan), np.nan, np.inf)
    keep_eq = np.diff(p.A_eq.indptr) > 0
    if np.any(np.abs(p.b_eq[~keep_eq]) > FEAS_TOL):
        return SolveResult(SolveStatus.INFEASIBLE, np.full(m, np.nan), np.nan, np.inf)
    A_ub, b_ub = p.A_ub[keep], p.b_ub[keep]
    eye = sp.identity(m, format="csr")
    lo = np.isfinite(p.lb)
    hi = np.isfinite(p.ub)
    A = sp.vstack([p.A_eq[keep_eq], A_ub, -eye[lo], eye[hi]], format="csc")
    b = np.concatenate([p.b_eq[keep_eq], b_ub, -p.lb[lo], p.ub[hi]])
    n_eq = int(keep_eq.sum())
    n_in = A.shape[0] - n_eq
    cones = []
    if n_eq:
        cones.append(clarabel.ZeroConeT(n_eq))
    if n_in:
        cones.append(clarabel.NonnegativeConeT(n_in))
    P = sp.triu(p.Q, format="csc")
    # Clarabel occasionally cycles on small degenerate problems; the
    # fallbacks switch off equilibration, then shorten the step.
    for tweak in ({}, {"equilibrate_enable": False}, {"max_step_fraction": 0.9}):
        settings = clarabel.DefaultSettings()
        settings.verbose = False
        settings.max_iter = max_iter
        settings.tol_gap_abs = tol
        settings.tol_gap_rel = tol
        settings.tol_feas = tol
        settings.tol_ktratio = 1e-8
        for k, v in tweak.items():
            setattr(settings, k, v)
        sol = clarabel.DefaultSolver(P, np.asarray(p.c, float), A, b, cones, settings).solve()
        status = _clarabel_status(str(sol.status).split(".")[-1])
        if status is not SolveStatus.ITERATION_LIMIT:
            break
    x = np.asarray(sol.x, float)
    if status is not SolveStatus.OPTIMAL:
        return SolveResult(status, x, np.nan, p.max_violation(x) if np.all(np.isfinite(x)) else np.inf)
    z = np.asarray(sol.z, float)
    s = np.asarray(sol.s, float)
    stat = p.Q @ x + p.c + A.T @ z
    kkt = max(float(np.max(np.abs(stat), initial=0.0)),
              float(np.max(np.abs(s[n_eq:] * z[n_eq:]), initial=0.0)))
    viol = p.max_violation(x)
    # Interior-point iterates can drift along an unbounded optimal face (free
    # intercepts trading against slopes), so feasibility is judged relative
    # to the size of the solution.
    if viol > FEAS_TOL * max(1.0, float(np.max(np.abs(x), initial=0.0))):
        status = SolveStatus.ITERATION_LIMIT
    ineq = np.zeros(p.A_ub.shape[0])
    ineq[keep] = z[n_eq:n_eq + A_ub.shape[0]]
    eq = np.zeros(p.A_eq.shape[0])
    eq[keep_eq] = z[:n_eq]
    duals = {"eq": eq, "ineq": ineq}
    return SolveResult(status, x, p.objective(x), viol, duals, kkt)


def solve(program: MathProgram) -> SolveResult:
    """Dispatch to :func:`solve_qp` or :func:`solve_lp`."""
    return solve_qp(program) if program.is_quadratic else solve_lp(program)
