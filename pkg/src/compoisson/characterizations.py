"""Convolution, conditional laws given a sum, closure tests, Stein residuals and limit curves."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import ParameterError, WindowMassError, ZeroMassError
from .kernels import (
    CmbParams,
    CmnbParams,
    CmpParams,
    cmb_pmf,
    cmnb_pmf,
    cmp_pmf,
)
from .pmf import DEFAULT_TOL, TruncatedPmf


def convolve(pmf_x: TruncatedPmf, pmf_y: TruncatedPmf) -> TruncatedPmf:
    """Law of ``X + Y`` for independent ``X``, ``Y``.

    The exact discrete convolution of the two windows. Any outcome outside
    the combined window needs ``X`` or ``Y`` outside its own window, so the
    tail bounds add.
    """
    probs = np.convolve(pmf_x.probs, pmf_y.probs)
    return TruncatedPmf(
        pmf_x.support_start + pmf_y.support_start,
        probs,
        min(pmf_x.tail_bound + pmf_y.tail_bound, 1.0),
        max(pmf_x.tol, pmf_y.tol),
        meta={
            "family": "convolution",
            "params": {"x": pmf_x.to_dict()["params"], "y": pmf_y.to_dict()["params"],
                       "x_family": pmf_x.meta.get("family"), "y_family": pmf_y.meta.get("family")},
        },
    )


def _covers(pmf: TruncatedPmf, k: int) -> bool:
    return k <= pmf.last or pmf.tail_bound == 0


def conditional_given_sum(pmf_x: TruncatedPmf, pmf_y: TruncatedPmf, s: int) -> np.ndarray:
    """``P(X = k | X + Y = s)`` for ``k = 0..s`` by Bayes' rule.

    Raises
    ------
    WindowMassError
        If a window stops before ``s`` while its law has unstored mass.
    ZeroMassError
        If ``P(X + Y = s) = 0``.
    """
    if int(s) != s or s < 0:
        raise ParameterError(f"s must be a non-negative integer (got {s})")
    s = int(s)
    if not (_covers(pmf_x, s) and _covers(pmf_y, s)):
        raise WindowMassError(f"windows must reach s={s} to condition on the sum")
    px = pmf_x.padded(0, s + 1)
    py = pmf_y.padded(0, s + 1)[::-1]
    joint = px * py
    total = math.fsum(joint)
    if total == 0:
        raise ZeroMassError(f"P(X + Y = {s}) is zero")
    return joint / total


def a_sequence(lambda_x: float, lambda_y: float, nu: float, n_max: int) -> np.ndarray:
    """``a_n = sum_k (C(n,k) p**k q**(n-k))**nu`` for ``n = 0..n_max``, ``p = lx/(lx+ly)``.

    ``a_n`` is the factor by which the law of a sum of two independent CMP
    variables departs from the CMP recurrence.

    Examples
    --------
    >>> a_sequence(1.0, 1.0, 2.0, 2).tolist()
    [1.0, 0.5, 0.375]
    """
    if not (lambda_x > 0 and lambda_y > 0 and nu > 0):
        raise ParameterError("lambda_x, lambda_y and nu must be positive")
    if int(n_max) != n_max or n_max < 0:
        raise ParameterError(f"n_max must be a non-negative integer (got {n_max})")
    log_p = math.log(lambda_x / (lambda_x + lambda_y))
    log_q = math.log(lambda_y / (lambda_x + lambda_y))
    out = np.empty(int(n_max) + 1)
    for n in range(int(n_max) + 1):
        k = np.arange(n + 1)
        log_binom = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
        terms = np.exp(nu * (log_binom + k * log_p + (n - k) * log_q))
        out[n] = math.fsum(terms)
    return out


@dataclass(frozen=True)
class ClosureReport:
    """Whether the sum of two CMP(., nu) variables stays inside the CMP family.

    ``lambda_x`` / ``lambda_y`` are the order-1 rates ``lambda_i**(1/nu)``.
    Deviations are relative errors of the consecutive ratios
    ``P(n)/P(n-1)`` against ``rate / n**nu``; the fitted rate comes from the
    ``n = 1`` ratio and the reference rate is ``lambda1 + lambda2``.
    """

    nu: float
    lambda_x: float
    lambda_y: float
    a_seq: np.ndarray
    first_violation_n: Optional[int]
    max_ratio_deviation: float
    fitted_lambda: float
    first_violation_n_sum: Optional[int]
    max_ratio_deviation_sum: float
    ratios: np.ndarray

    def to_dict(self) -> dict:
        return {
            "nu": self.nu,
            "lambda_x": self.lambda_x,
            "lambda_y": self.lambda_y,
            "a_seq": [float(a) for a in self.a_seq],
            "first_violation_n": self.first_violation_n,
            "max_ratio_deviation": self.max_ratio_deviation,
            "fitted_lambda": self.fitted_lambda,
            "first_violation_n_sum": self.first_violation_n_sum,
            "max_ratio_deviation_sum": self.max_ratio_deviation_sum,
        }


def _first_above(dev: np.ndarray, tol: float, offset: int) -> Optional[int]:
    hits = np.flatnonzero(dev > tol)
    return int(hits[0]) + offset if hits.size else None


def closure_test(lambda1: float, lambda2: float, nu: float, n_max: int = 20,
                 tol: float = 1e-10) -> ClosureReport:
    """Check the CMP recurrence on the law of ``CMP(lambda1, nu) + CMP(lambda2, nu)``.

    Examples
    --------
    >>> closure_test(1.0, 1.0, 2.0).first_violation_n
    2
    >>> closure_test(1.0, 1.0, 1.0).first_violation_n is None
    True
    """
    if int(n_max) != n_max or n_max < 2:
        raise ParameterError(f"n_max >= 2 required (got {n_max})")
    n_max = int(n_max)
    x = cmp_pmf(CmpParams(lambda1, nu), k_max=n_max)
    y = cmp_pmf(CmpParams(lambda2, nu), k_max=n_max)
    probs = convolve(x, y).probs[: n_max + 1]
    usable = int(np.argmax(probs == 0)) if np.any(probs == 0) else probs.size
    probs = probs[:usable]
    n = np.arange(1, probs.size)
    ratios = probs[1:] / probs[:-1]
    fitted = float(ratios[0])
    dev_fit = np.abs(ratios * n ** nu / fitted - 1.0)
    dev_sum = np.abs(ratios * n ** nu / (lambda1 + lambda2) - 1.0)
    return ClosureReport(
        nu=nu,
        lambda_x=lambda1 ** (1.0 / nu),
        lambda_y=lambda2 ** (1.0 / nu),
        a_seq=a_sequence(lambda1 ** (1.0 / nu), lambda2 ** (1.0 / nu), nu, n_max),
        first_violation_n=_first_above(dev_fit, tol, 1),
        max_ratio_deviation=float(dev_fit.max()),
        fitted_lambda=fitted,
        first_violation_n_sum=_first_above(dev_sum, tol, 1),
        max_ratio_deviation_sum=float(dev_sum.max()),
        ratios=ratios,
    )


class SteinResidual(NamedTuple):
    max_residual: float
    argmax_j: int


def stein_residual(pmf_w: TruncatedPmf, lam: float, nu: float) -> SteinResidual:
    """``max_j |lam * P(j-1) - j**nu * P(j)|`` over ``j >= 1`` in the window.

    This is ``E g(W)`` for the indicator test functions ``f = 1[w = j]`` of
    the CMP Stein operator; it vanishes identically iff ``W ~ CMP(lam, nu)``.
    """
    if not (lam > 0 and nu > 0):
        raise ParameterError("lambda and nu must be positive")
    j = np.arange(max(pmf_w.support_start, 1), pmf_w.last + 1)
    if j.size == 0:
        return SteinResidual(0.0, 1)
    p_j = pmf_w.at(j)
    p_prev = pmf_w.at(j - 1)
    with np.errstate(over="ignore"):
        scaled = np.where(p_j > 0, np.exp(nu * np.log(j) + np.log(np.where(p_j > 0, p_j, 1.0))), 0.0)
    res = np.abs(lam * p_prev - scaled)
    i = int(np.argmax(res))
    return SteinResidual(float(res[i]), int(j[i]))


def fit_lambda(pmf: TruncatedPmf) -> float:
    """Rate matching the ``n = 1`` consecutive ratio: ``P(1) / P(0)`` (``1**nu = 1``)."""
    p0, p1 = pmf.at(0), pmf.at(1)
    if p0 <= 0 or p1 <= 0:
        raise ZeroMassError("fitting needs P(0) > 0 and P(1) > 0")
    return p1 / p0


def _cmb_log_kernel(z: int, log_p: float, log_q: float, nu: float) -> np.ndarray:
    r = np.arange(z + 1)
    lw = nu * (gammaln(z + 1) - gammaln(r + 1) - gammaln(z - r + 1)) + r * log_p + (z - r) * log_q
    return lw - logsumexp(lw)


def rao_rubin_gap(pmf_x: TruncatedPmf, p: float, nu: float) -> float:
    """Largest difference between the damaged law and the undamaged-conditional law.

    With damage kernel ``P(Y = r | X = z) = CMB(z, p, nu)(r)`` this returns
    ``max_r |P(Y = r) - P(Y = r | X = Y)|``.

    Raises
    ------
    WindowMassError
        If the window holds less than ``1 - 1e-9`` of the mass.
    """
    if not 0 < p < 1:
        raise ParameterError(f"0 < p < 1 required (got {p})")
    if not nu > 0:
        raise ParameterError(f"nu > 0 required (got {nu})")
    if pmf_x.mass < 1 - 1e-9:
        raise WindowMassError(f"window mass {pmf_x.mass:.12f} is below 1 - 1e-9")
    log_p, log_q = math.log(p), math.log1p(-p)
    last = pmf_x.last
    marginal = np.zeros(last + 1)
    stay = np.zeros(last + 1)
    for z in range(pmf_x.support_start, last + 1):
        pz = pmf_x.at(z)
        if pz == 0:
            continue
        kernel = np.exp(_cmb_log_kernel(z, log_p, log_q, nu))
        marginal[: z + 1] += pz * kernel
        stay[z] = pz * kernel[z]
    total = math.fsum(stay)
    if total == 0:
        raise ZeroMassError("P(X = Y) is zero")
    return float(np.max(np.abs(marginal - stay / total)))


class TvInterval(NamedTuple):
    lower: float
    upper: float


def tv_distance(pmf_a: TruncatedPmf, pmf_b: TruncatedPmf) -> TvInterval:
    """Total variation distance as an interval absorbing both unstored tails.

    A window renormalized after dropping a tail ``t`` sits within ``2 t`` of
    the true law in l1, so the window distance moves by at most the sum of
    the two tail bounds in either direction.

    Examples
    --------
    >>> from compoisson.pmf import point_mass
    >>> tv_distance(point_mass(0), point_mass(3))
    TvInterval(lower=1.0, upper=1.0)
    """
    lo = min(pmf_a.support_start, pmf_b.support_start)
    hi = max(pmf_a.last, pmf_b.last) + 1
    diff = math.fsum(np.abs(pmf_a.padded(lo, hi) - pmf_b.padded(lo, hi))) / 2
    slack = pmf_a.tail_bound + pmf_b.tail_bound
    lower = min(max(diff - slack, 0.0), 1.0)
    upper = min(diff + slack, 1.0)
    return TvInterval(lower, upper)


@dataclass(frozen=True)
class LimitCurve:
    grid: np.ndarray
    tv: np.ndarray  # upper ends of the TV intervals
    tv_lower: np.ndarray
    lam: float
    nu: float
    family: str

    def strictly_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.tv) < 0))

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "lambda": self.lam,
            "nu": self.nu,
            "grid": [float(g) for g in self.grid],
            "tv": [float(t) for t in self.tv],
            "tv_lower": [float(t) for t in self.tv_lower],
        }


def _curve(laws, grid, lam, nu, family, tol) -> LimitCurve:
    target = cmp_pmf(CmpParams(lam, nu), tol=tol)
    tvs = [tv_distance(law, target) for law in laws]
    return LimitCurve(
        np.asarray(grid, dtype=float),
        np.array([t.upper for t in tvs]),
        np.array([t.lower for t in tvs]),
        lam,
        nu,
        family,
    )


def limit_cmb_to_cmp(lam: float, nu: float, m_grid: Sequence[int],
                     tol: float = DEFAULT_TOL) -> LimitCurve:
    """TV from ``CMB(m, lam / m**nu, nu)`` to ``CMP(lam, nu)`` along ``m_grid``."""
    grid = [int(m) for m in m_grid]
    if any(m ** nu <= lam for m in grid):
        raise ParameterError(f"every m needs m**nu > lambda={lam} so that p_m < 1")
    laws = [cmb_pmf(CmbParams(m, lam / m ** nu, nu)) for m in grid]
    return _curve(laws, grid, lam, nu, "cmb", tol)


def limit_cmnb_to_cmp(lam: float, nu: float, r_grid: Sequence[float],
                      tol: float = DEFAULT_TOL) -> LimitCurve:
    """TV from ``CMNB(r, nu, lam / (r**nu + lam))`` to ``CMP(lam, nu)`` along ``r_grid``."""
    grid = [float(r) for r in r_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ParameterError("r_grid must be strictly increasing")
    laws = [cmnb_pmf(CmnbParams(r, nu, lam / (r ** nu + lam)), tol) for r in grid]
    return _curve(laws, grid, lam, nu, "cmnb", tol)


__all__ = [
    "ClosureReport",
    "LimitCurve",
    "SteinResidual",
    "TvInterval",
    "a_sequence",
    "closure_test",
    "conditional_given_sum",
    "convolve",
    "fit_lambda",
    "limit_cmb_to_cmp",
    "limit_cmnb_to_cmp",
    "rao_rubin_gap",
    "stein_residual",
    "tv_distance",
]
