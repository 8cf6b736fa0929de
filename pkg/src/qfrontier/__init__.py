"""Quantile and expectile frontier estimation under shape constraints.

Estimators
----------
fit_cqr, fit_cer
    Convex (monotone and concave) quantile and expectile regression.
fit_icqr, fit_icer
    Isotonic variants constrained by a dominance partial order only.
fit_order_alpha, fdh, fit_convexified_order_alpha
    Partial and full frontiers built from conditional order statistics.
"""

from .bridge import (
    ErrorKind,
    ErrorSpec,
    calibrate_expectile,
    error_quantile,
    theoretical_expectile_of_quantile,
    theoretical_quantile_of_expectile,
)
from .convex import build_cer_program, build_cqr_program, check_properties, fit_cer, fit_cqr, predict
from .core import (
    Dataset,
    DomainError,
    DominanceMatrix,
    EstimationError,
    FrontierError,
    FrontierFit,
    LevelKind,
    Method,
    ParseError,
    QuantileLevel,
    SchemaError,
    dominance_matrix,
    load_dataset,
    write_dataset,
)
from .isotonic import fit_icer, fit_icqr, predict_step
from .optimize import MathProgram, SolveResult, SolveStatus, solve, solve_lp, solve_qp
from .partial import (
    DeaScore,
    dea_vrs_output,
    fdh,
    fit_convexified_order_alpha,
    fit_convexified_order_alpha_shifted,
    fit_order_alpha,
    predict_order_alpha,
    violation_flag,
)

__version__ = "0.1.0"
