"""Conversion between quantile and expectile levels.

Two routes are provided. The theoretical route maps a quantile level of a
known error law to the expectile level with the same location, through the
lower and upper partial moments at the quantile. The empirical routes fit
expectile regressions over a grid of levels and read the quantile level off
the share of observations below each fit: either the closest grid point
(counting) or linear interpolation between the two bracketing grid points.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, optimize, special

from .core import (
    Dataset,
    DomainError,
    FrontierFit,
    LevelKind,
    QuantileLevel,
    as_level,
)

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


class ErrorKind(str, enum.Enum):
    NOISE_ONLY = "noise_only"
    INEFFICIENCY_ONLY = "inefficiency_only"
    COMPOSITE = "composite"


@dataclass(frozen=True)
class ErrorSpec:
    """Error law: ``v``, ``-u`` or ``v - u`` with ``v ~ N(0, sigma_v^2)`` and ``u ~ |N(0, sigma_u^2)|``."""

    kind: ErrorKind
    sigma_v: float = 0.0
    sigma_u: float = 0.0

    def __post_init__(self):
        kind = ErrorKind(self.kind)
        sv, su = float(self.sigma_v), float(self.sigma_u)
        if sv < 0 or su < 0 or not (math.isfinite(sv) and math.isfinite(su)):
            raise DomainError("sigmas must be finite and >= 0")
        if kind is ErrorKind.NOISE_ONLY:
            su = 0.0
        elif kind is ErrorKind.INEFFICIENCY_ONLY:
            sv = 0.0
        if sv == 0 and su == 0:
            raise DomainError(f"{kind.value} error needs a positive scale")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "sigma_v", sv)
        object.__setattr__(self, "sigma_u", su)

    @property
    def effective_kind(self) -> ErrorKind:
        # a composite with one scale at zero is one of the pure laws
        if self.sigma_u == 0:
            return ErrorKind.NOISE_ONLY
        if self.sigma_v == 0:
            return ErrorKind.INEFFICIENCY_ONLY
        return ErrorKind.COMPOSITE

    @property
    def mean(self) -> float:
        return -self.sigma_u * SQRT_2_OVER_PI

    @property
    def std(self) -> float:
        return math.sqrt(self.sigma_v ** 2 + self.sigma_u ** 2 * (1 - 2 / math.pi))

    @property
    def support(self) -> tuple:
        if self.effective_kind is ErrorKind.INEFFICIENCY_ONLY:
            return (-math.inf, 0.0)
        return (-math.inf, math.inf)

    def pdf(self, e):
        e = np.asarray(e, float)
        sv, su = self.sigma_v, self.sigma_u
        kind = self.effective_kind
        if kind is ErrorKind.NOISE_ONLY:
            return np.exp(-0.5 * (e / sv) ** 2) / (sv * math.sqrt(2 * math.pi))
        if kind is ErrorKind.INEFFICIENCY_ONLY:
            dens = 2.0 * np.exp(-0.5 * (e / su) ** 2) / (su * math.sqrt(2 * math.pi))
            return np.where(e <= 0, dens, 0.0)
        s = math.hypot(sv, su)
        lam = su / sv
        z = e / s
        return 2.0 / s * np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi) * special.ndtr(-lam * z)

    def cdf(self, e):
        e = np.asarray(e, float)
        sv, su = self.sigma_v, self.sigma_u
        kind = self.effective_kind
        if kind is ErrorKind.NOISE_ONLY:
            return special.ndtr(e / sv)
        if kind is ErrorKind.INEFFICIENCY_ONLY:
            return np.where(e <= 0, 2.0 * special.ndtr(np.minimum(e, 0.0) / su), 1.0)
        # e/sigma is skew-normal with shape -lambda
        s = math.hypot(sv, su)
        z = e / s
        return special.ndtr(z) + 2.0 * special.owens_t(z, su / sv)


def error_quantile(spec: ErrorSpec, tau) -> float:
    """Inverse CDF of the error law at quantile level ``tau``."""
    tau = as_level(tau, LevelKind.QUANTILE).value
    kind = spec.effective_kind
    if kind is ErrorKind.NOISE_ONLY:
        return float(spec.sigma_v * special.ndtri(tau))
    if kind is ErrorKind.INEFFICIENCY_ONLY:
        return float(spec.sigma_u * special.ndtri(tau / 2.0))
    mu, sd = spec.mean, spec.std
    lo, hi = mu - 10 * sd, mu + 10 * sd
    while spec.cdf(lo) > tau:
        lo -= 10 * sd
    while spec.cdf(hi) < tau:
        hi += 10 * sd
    return float(optimize.brentq(lambda e: float(spec.cdf(e)) - tau, lo, hi, xtol=1e-13, rtol=1e-15, maxiter=500))


def partial_moments(spec: ErrorSpec, q: float) -> tuple:
    """Lower and upper partial moments ``E[(e-q) 1{e<q}]`` and ``E[(e-q) 1{e>q}]``."""
    lo_sup, hi_sup = spec.support
    f = lambda e: (e - q) * float(spec.pdf(e))
    lpm = integrate.quad(f, -math.inf, q, epsabs=1e-11, epsrel=1e-11, limit=200)[0]
    if q >= hi_sup:
        upm = 0.0
    elif math.isinf(hi_sup):
        upm = integrate.quad(f, q, math.inf, epsabs=1e-11, epsrel=1e-11, limit=200)[0]
    else:
        upm = integrate.quad(f, q, hi_sup, epsabs=1e-11, epsrel=1e-11, limit=200)[0]
    return lpm, upm


def theoretical_expectile_of_quantile(spec: ErrorSpec, tau) -> float:
    """Expectile level whose expectile equals the ``tau``-quantile of the error law."""
    q = error_quantile(spec, tau)
    lpm, upm = partial_moments(spec, q)
    return float(lpm / (lpm - upm))


def theoretical_quantile_of_expectile(spec: ErrorSpec, tau_tilde) -> float:
    """Inverse of :func:`theoretical_expectile_of_quantile`."""
    target = as_level(tau_tilde, LevelKind.EXPECTILE).value
    g = lambda t: theoretical_expectile_of_quantile(spec, t) - target
    lo, hi = 1e-9, 1.0 - 1e-9
    if g(lo) > 0 or g(hi) < 0:
        raise DomainError(f"expectile level {target} is outside the invertible range")
    return float(optimize.brentq(g, lo, hi, xtol=1e-13, rtol=1e-15))


def empirical_quantile_level(fit: FrontierFit, threshold: float = 1e-6) -> float:
    """Share of observations strictly below the fitted frontier."""
    return float(np.sum(fit.residual_neg > threshold)) / fit.n


class CalibrationError(DomainError):
    pass


class CalibrationMethod(str, enum.Enum):
    EFRON_COUNT = "efron_count"
    WALTRUP_INTERPOLATE = "waltrup_interpolate"


@dataclass(frozen=True)
class ExpectileCalibration:
    """Record of an empirical quantile-to-expectile calibration.

    ``achieved_levels`` is NaN at grid points skipped by a coarse-to-fine search.
    """

    target_tau: float
    grid: np.ndarray
    achieved_levels: np.ndarray
    selected_tau_tilde: float
    method: CalibrationMethod


def default_grid() -> np.ndarray:
    return np.arange(1, 1000) / 1000.0


def calibrate_expectile(
    dataset: Dataset,
    target_tau,
    grid: Optional[Sequence[float]] = None,
    method="efron_count",
    estimator: str = "CER",
    stride: int = 1,
    threshold: float = 1e-6,
):
    """Pick the expectile level whose fit puts a share ``target_tau`` below it.

    Parameters
    ----------
    grid : sequence of float, optional
        Ascending expectile levels, default 0.001, 0.002, ..., 0.999.
    method : {"efron_count", "waltrup_interpolate"}
        Closest grid point, or linear interpolation between the bracketing
        grid points followed by a refit.
    estimator : {"CER", "ICER"}
    stride : int
        With ``stride > 1`` every ``stride``-th grid point is fitted first and
        only the stretch around the crossing is refined. This agrees with the
        full grid whenever the achieved levels are monotone in the grid.

    Returns
    -------
    (ExpectileCalibration, FrontierFit)
    """
    from .convex import fit_cer
    from .isotonic import fit_icer

    tau = as_level(target_tau, LevelKind.QUANTILE).value
    method = CalibrationMethod(method)
    fitter = {"CER": fit_cer, "ICER": fit_icer}.get(str(estimator).upper())
    if fitter is None:
        raise ValueError(f"estimator must be CER or ICER, got {estimator!r}")
    grid = default_grid() if grid is None else np.asarray(grid, float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty 1-D sequence")
    if np.any(np.diff(grid) <= 0) or grid[0] <= 0 or grid[-1] >= 1:
        raise ValueError("grid must be strictly ascending inside (0, 1)")
    stride = max(int(stride), 1)

    levels = np.full(grid.size, np.nan)
    fits = {}

    def evaluate(j):
        if j not in fits:
            fits[j] = fitter(dataset, QuantileLevel.expectile(grid[j]))
            levels[j] = empirical_quantile_level(fits[j], threshold)
        return levels[j]

    coarse = list(range(0, grid.size, stride))
    if coarse[-1] != grid.size - 1:
        coarse.append(grid.size - 1)
    for j in coarse:
        evaluate(j)
    if stride > 1:
        c_lv = levels[coarse]
        below = [k for k, v in enumerate(c_lv) if v < tau]
        k_lo = below[-1] if below else 0
        # ties go to the smallest level, so step back to the start of the plateau
        while k_lo > 0 and c_lv[k_lo - 1] == c_lv[k_lo]:
            k_lo -= 1
        lo = coarse[max(k_lo - 1, 0)]
        above = [k for k, v in enumerate(c_lv) if v > tau and coarse[k] > lo]
        hi = coarse[above[0]] if above else coarse[-1]
        for j in range(lo, hi + 1):
            evaluate(j)

    done = np.flatnonzero(~np.isnan(levels))
    lv = levels[done]
    if tau < lv.min() or tau > lv.max():
        raise CalibrationError(
            f"target level {tau} outside achieved range [{lv.min():.6g}, {lv.max():.6g}]")

    if method is CalibrationMethod.EFRON_COUNT:
        gap = np.abs(lv - tau)
        j = int(done[np.flatnonzero(gap == gap.min())[0]])
        selected, fit = float(grid[j]), fits[j]
    else:
        exact = np.flatnonzero(lv == tau)
        if exact.size:
            j = int(done[exact[0]])
            selected, fit = float(grid[j]), fits[j]
        else:
            # tau lies strictly between two consecutive evaluated levels
            k = int(np.flatnonzero((lv[:-1] - tau) * (lv[1:] - tau) < 0)[0])
            a, b = done[k], done[k + 1]
            la, lb = levels[a], levels[b]
            selected = float(grid[a] + (tau - la) * (grid[b] - grid[a]) / (lb - la))
            fit = fitter(dataset, QuantileLevel.expectile(selected))
    lv_out = levels.copy()
    lv_out.setflags(write=False)
    g = grid.copy()
    g.setflags(write=False)
    return ExpectileCalibration(tau, g, lv_out, selected, method), fit
