"""Independent reference computations used by the test-suite.

Nothing here imports the package's solver layer. The mathematical programs
are rebuilt densely, row by row, and handed to GLPK or SLSQP, or solved by
exhaustive enumeration.
"""

import itertools
import math

import numpy as np
from cvxopt import glpk, matrix, solvers

solvers.options["show_progress"] = False
glpk.options["msg_lev"] = "GLP_MSG_OFF"


# -- generic LP / QP ------------------------------------------------------

def lp_vertex_enumeration(c, G, h):
    """Minimize c'x over {Gx <= h} by visiting every basic solution.

    Returns ``(objective, x)``, or ``(None, None)`` when no vertex is feasible.
    The feasible set is assumed bounded.
    """
    c, G, h = (np.asarray(a, float) for a in (c, G, h))
    m = c.shape[0]
    best = (None, None)
    for rows in itertools.combinations(range(G.shape[0]), m):
        A = G[list(rows)]
        if abs(np.linalg.det(A)) < 1e-10:
            continue
        x = np.linalg.solve(A, h[list(rows)])
        if np.all(G @ x <= h + 1e-9):
            val = float(c @ x)
            if best[0] is None or val < best[0] - 1e-12:
                best = (val, x)
    return best


def qp_active_set_enumeration(Q, c, G, h, A=None, b=None):
    """Minimize 1/2 x'Qx + c'x s.t. Gx <= h, Ax = b for positive definite Q.

    Every subset of inequalities is tried as the active set; the KKT point
    that is primal feasible with nonnegative multipliers is the optimum.
    """
    Q, c, G, h = (np.asarray(a, float) for a in (Q, c, G, h))
    m = c.shape[0]
    A = np.zeros((0, m)) if A is None else np.asarray(A, float)
    b = np.zeros(0) if b is None else np.asarray(b, float)
    best = (None, None)
    for k in range(G.shape[0] + 1):
        for S in itertools.combinations(range(G.shape[0]), k):
            S = list(S)
            E = np.vstack([A, G[S]])
            r = np.concatenate([b, h[S]])
            K = np.block([[Q, E.T], [E, np.zeros((E.shape[0], E.shape[0]))]])
            try:
                sol = np.linalg.solve(K, np.concatenate([-c, r]))
            except np.linalg.LinAlgError:
                continue
            x, lam = sol[:m], sol[m + A.shape[0]:]
            if np.all(G @ x <= h + 1e-9) and np.all(lam >= -1e-9):
                val = float(0.5 * x @ Q @ x + c @ x)
                if best[0] is None or val < best[0]:
                    best = (val, x)
    return best


# -- shape-constrained regressions ---------------------------------------

def _afriat_dense(x, y, pairs):
    """Variable order per observation block: alpha, beta (d), eps+, eps-."""
    n, d = x.shape
    w = d + 3
    nv = n * w
    G, h = [], []
    for i, k in pairs:
        if i == k:
            continue
        row = np.zeros(nv)
        row[i * w] += 1.0
        row[i * w + 1:i * w + 1 + d] += x[i]
        row[k * w] -= 1.0
        row[k * w + 1:k * w + 1 + d] -= x[i]
        G.append(row)
        h.append(0.0)
    for i in range(n):
        for j in range(1, w):  # beta, eps+, eps- nonnegative
            row = np.zeros(nv)
            row[i * w + j] = -1.0
            G.append(row)
            h.append(0.0)
    Aeq = np.zeros((n, nv))
    for i in range(n):
        Aeq[i, i * w] = 1.0
        Aeq[i, i * w + 1:i * w + 1 + d] = x[i]
        Aeq[i, i * w + 1 + d] = 1.0
        Aeq[i, i * w + 2 + d] = -1.0
    return np.array(G), np.array(h), Aeq, np.asarray(y, float), w


def _pairs(n, mask):
    if mask is None:
        return [(i, k) for i in range(n) for k in range(n)]
    return [(i, k) for i in range(n) for k in range(n) if mask[i][k]]


def regression_oracle(x, y, level, quadratic, mask=None):
    """Objective and fitted values of the (isotonic) CQR / CER program.

    The LP goes to GLPK's simplex on a dense row-by-row model. The QP is
    solved in reduced form over (alpha, beta) only, where the asymmetric
    squared loss is continuously differentiable, by SLSQP.
    """
    x = np.asarray(x, float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(y, float)
    n, d = x.shape
    pairs = _pairs(n, mask)
    if not quadratic:
        G, h, Aeq, beq, w = _afriat_dense(x, y, pairs)
        q = np.zeros(n * w)
        for i in range(n):
            q[i * w + 1 + d] = level
            q[i * w + 2 + d] = 1 - level
        sol = solvers.lp(matrix(q), matrix(G), matrix(h), matrix(Aeq), matrix(beq), solver="glpk")
        z = np.array(sol["x"]).ravel()
        fitted = np.array([z[i * w] + z[i * w + 1:i * w + 1 + d] @ x[i] for i in range(n)])
        return float(q @ z), fitted, sol["status"]
    return _reduced_qp(x, y, level, pairs)


def _reduced_qp(x, y, t, pairs):
    from scipy.optimize import minimize

    n, d = x.shape

    def fitted_of(z):
        return z[:n] + np.einsum("ij,ij->i", z[n:].reshape(n, d), x)

    def loss(z):
        r = y - fitted_of(z)
        return t * np.sum(np.maximum(r, 0) ** 2) + (1 - t) * np.sum(np.maximum(-r, 0) ** 2)

    def grad(z):
        r = y - fitted_of(z)
        dr = -2 * (t * np.maximum(r, 0) - (1 - t) * np.maximum(-r, 0))
        return np.concatenate([dr, (dr[:, None] * x).ravel()])

    rows = []
    for i, h in pairs:
        if i == h:
            continue
        row = np.zeros(n + n * d)
        row[h] += 1.0
        row[i] -= 1.0
        row[n + h * d:n + (h + 1) * d] += x[i]
        row[n + i * d:n + (i + 1) * d] -= x[i]
        rows.append(row)
    cons = []
    if rows:
        C = np.array(rows)
        cons = [{"type": "ineq", "fun": lambda z: C @ z, "jac": lambda z: C}]
    z0 = np.concatenate([np.full(n, y.mean()), np.zeros(n * d)])
    res = minimize(loss, z0, jac=grad, method="SLSQP", constraints=cons,
                   bounds=[(None, None)] * n + [(0, None)] * (n * d),
                   options={"ftol": 1e-15, "maxiter": 5000})
    # SLSQP often flags the tight ftol as unmet; the caller compares objectives
    return float(res.fun), fitted_of(res.x), "optimal"


def dea_oracle(X, Y, i):
    """Output-oriented VRS theta of point i via GLPK with a dense model."""
    X = np.asarray(X, float)
    if X.ndim == 1:
        X = X[:, None]
    Y = np.asarray(Y, float)
    n, d = X.shape
    # variables [theta, lambda]
    c = np.zeros(n + 1)
    c[0] = -1.0
    G = [np.concatenate([[Y[i]], -Y])]
    h = [0.0]
    for k in range(d):
        G.append(np.concatenate([[0.0], X[:, k]]))
        h.append(X[i, k])
    for j in range(n):
        row = np.zeros(n + 1)
        row[1 + j] = -1.0
        G.append(row)
        h.append(0.0)
    A = np.concatenate([[0.0], np.ones(n)])[None, :]
    sol = solvers.lp(matrix(c), matrix(np.array(G)), matrix(np.array(h)), matrix(A), matrix([1.0]), solver="glpk")
    return float(np.array(sol["x"]).ravel()[0])


def order_statistic_oracle(x, y, xq, tau):
    """Smallest y with empirical conditional CDF >= tau, by sorting and scanning."""
    x = np.asarray(x, float)
    if x.ndim == 1:
        x = x[:, None]
    S = sorted(float(v) for v, xi in zip(y, x) if np.all(xi <= xq))
    N = len(S)
    for j, v in enumerate(S, start=1):
        if j / N >= tau - 1e-15:
            return v
    return S[-1]


# -- error laws ------------------------------------------------------------

def normal_expectile_level(tau):
    """tau-tilde for the standard normal from closed-form partial moments."""
    from scipy.stats import norm

    q = norm.ppf(tau)
    lpm = -norm.pdf(q) - q * tau              # E[(e - q) 1{e < q}]
    upm = norm.pdf(q) - q * (1 - tau)         # E[(e - q) 1{e > q}]
    return lpm / (lpm - upm)


def composite_mc_quantile(sigma_v, sigma_u, taus, draws=10_000_000, seed=12345):
    """Monte Carlo quantiles of v - |u| and their standard errors."""
    from scipy.stats import skewnorm

    rng = np.random.default_rng(seed)
    e = sigma_v * rng.standard_normal(draws) - np.abs(sigma_u * rng.standard_normal(draws))
    s = math.hypot(sigma_v, sigma_u)
    out = []
    for t in taus:
        q = float(np.quantile(e, t))
        dens = skewnorm.pdf(q / s, -sigma_u / sigma_v) / s
        out.append((q, math.sqrt(t * (1 - t) / draws) / dens))
    return out
