"""
The LP/QP layer
===============

Every estimator builds a MathProgram and hands it to one solve call. The
same interface is available directly.
"""

import numpy as np

from qfrontier import MathProgram, solve

# maximize x + y subject to x + 2y <= 4, 3x + y <= 6, x, y >= 0
lp = MathProgram.from_rows([-1.0, -1.0], [([1, 2], "<=", 4), ([3, 1], "<=", 6)], bounds=[(0, None)] * 2)
res = solve(lp)
print(res.status.value, res.solution.round(6), -res.objective_value)

# nearest point to (3, 3) on the same polygon: a strictly convex QP
qp = MathProgram.from_rows([-6.0, -6.0], [([1, 2], "<=", 4), ([3, 1], "<=", 6)],
                           bounds=[(0, None)] * 2, Q=2 * np.eye(2))
res = solve(qp)
print(res.status.value, res.solution.round(6), f"KKT residual {res.kkt_residual:.1e}")
