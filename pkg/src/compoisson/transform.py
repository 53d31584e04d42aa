"""The nu-power (COM-type) transform P(x)**nu / sum_j P(j)**nu and its expectations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ExistenceError, ParameterError
from .pmf import DEFAULT_TOL, TruncatedPmf


class PowerSum(NamedTuple):
    """``sum_x P(x)**a`` over a window, kept as a scaled vector to avoid overflow.

    The absolute terms are ``scaled * exp(log_scale)``; ``tail`` bounds the
    neglected part of the sum in the same absolute units, and ``ratio`` /
    ``power`` are the decay certificates of the powered law.
    """

    scaled: np.ndarray
    log_scale: float
    tail: float
    ratio: float | None
    power: float | None

    @property
    def window_total(self) -> float:
        return math.fsum(self.scaled)

    @property
    def log_total(self) -> float:
        return self.log_scale + math.log(self.window_total)

    @property
    def tail_rel(self) -> float:
        return self.tail / math.exp(self.log_total) if self.tail else 0.0


def power_sum(pmf: TruncatedPmf, a: float, tol: float = DEFAULT_TOL) -> PowerSum:
    """Window sum of ``P**a`` with a certified bound on the unstored remainder.

    Raises
    ------
    ExistenceError
        If ``a < 1`` and the remainder cannot be certified below ``tol``
        relative to the window sum. For ``a >= 1`` the remainder never
        exceeds ``tail_bound**a``, so no error is raised.
    """
    if not (math.isfinite(a) and a > 0):
        raise ParameterError(f"power must be a positive real (got {a})")
    probs = pmf.probs
    with np.errstate(divide="ignore"):
        lp = a * np.log(probs)
    log_scale = float(np.max(lp))
    if not math.isfinite(log_scale):
        raise ParameterError("pmf window carries no mass")
    scaled = np.exp(lp - log_scale)

    last = float(probs[-1])
    ratio = power = None
    if pmf.tail_ratio is not None:
        ratio = pmf.tail_ratio ** a
        tail = last ** a * ratio / (1.0 - ratio)
    elif pmf.tail_power is not None:
        power = pmf.tail_power * a
        if power <= 1:
            raise ExistenceError(
                f"sum of P**{a:g} diverges: polynomial decay exponent {pmf.tail_power:g} * {a:g} <= 1"
            )
        tail = last ** a * pmf.last / (power - 1.0)
    elif a >= 1:
        tail = pmf.tail_bound ** a
    elif pmf.tail_bound > 0:
        raise ExistenceError(
            f"sum of P**{a:g} cannot be certified finite: the pmf carries no tail decay "
            "certificate and has positive tail mass"
        )
    else:
        tail = 0.0

    out = PowerSum(scaled, log_scale, tail, ratio, power)
    if a < 1 and out.tail_rel > tol:
        raise ExistenceError(
            f"unstored part of sum P**{a:g} is {out.tail_rel:.3g} of the window sum, above "
            f"tol={tol:g}; build the input pmf with a tighter tol"
        )
    return out


@dataclass(frozen=True)
class ComTypeResult:
    pmf: TruncatedPmf
    log_norm_const: float  # -log sum_x P(x)**nu over the window
    nu: float


def com_type(pmf: TruncatedPmf, nu: float, tol: float = DEFAULT_TOL) -> ComTypeResult:
    """Law proportional to ``P(x)**nu`` on the same window as ``pmf``.

    The output keeps the input window; its tail bound and decay certificate
    are derived from the input's (ratio ``rho`` becomes ``rho**nu``, polynomial
    exponent ``s`` becomes ``s * nu``).

    Examples
    --------
    >>> from compoisson.kernels import geometric_pmf
    >>> res = com_type(geometric_pmf(0.5), 2.0)
    >>> round(float(res.pmf.probs[0]), 12)
    0.75
    """
    ps = power_sum(pmf, nu, tol)
    total = ps.window_total
    meta = dict(pmf.meta)
    meta.update(transform="com-type", nu=nu, log_norm_const=-ps.log_total, source=pmf.meta.get("family"))
    meta["family"] = f"com-type({pmf.meta.get('family', 'custom')})"
    meta["params"] = dict(pmf.meta.get("params", {}), transform_nu=nu)
    tail_rel = ps.tail_rel
    out = TruncatedPmf(
        pmf.support_start,
        ps.scaled / total,
        tail_rel / (1.0 + tail_rel),
        max(pmf.tol, tol),
        meta=meta,
        tail_ratio=ps.ratio,
        tail_power=ps.power,
    )
    return ComTypeResult(out, -ps.log_total, nu)


def com_expectation(pmf: TruncatedPmf, nu: float, f, tol: float = DEFAULT_TOL) -> float:
    """``E f(X_nu)``: the expectation of ``f`` under the order-``nu`` transform."""
    return com_type(pmf, nu, tol).pmf.expect(f)


def com_moments(pmf: TruncatedPmf, nu: float, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """Mean and variance of the order-``nu`` transform."""
    law = com_type(pmf, nu, tol).pmf
    return law.mean(), law.variance()


__all__ = ["ComTypeResult", "PowerSum", "com_expectation", "com_moments", "com_type", "power_sum"]
