"""Renyi/Tsallis entropies, the discrete (Kagan) score and Fisher information."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .characterizations import convolve
from .errors import InfiniteInformationError, ParameterError, RSPViolationError
from .pmf import DEFAULT_TOL, TruncatedPmf
from .transform import com_type, power_sum


def _check_order(alpha: float):
    if not (math.isfinite(alpha) and alpha > 0 and alpha != 1):
        raise ParameterError(f"entropy order must be positive and != 1 (got {alpha})")


def renyi_entropy(pmf: TruncatedPmf, alpha: float, tol: float = DEFAULT_TOL) -> float:
    """``log(sum P**alpha) / (1 - alpha)``, summed over the window.

    Raises ``ExistenceError`` when ``alpha < 1`` and the unstored part of the
    power sum cannot be certified below ``tol``.
    """
    _check_order(alpha)
    return power_sum(pmf, alpha, tol).log_total / (1.0 - alpha)


def tsallis_entropy(pmf: TruncatedPmf, alpha: float, tol: float = DEFAULT_TOL) -> float:
    """``(sum P**alpha - 1) / (1 - alpha)``."""
    _check_order(alpha)
    # expm1 keeps precision when the power sum is close to 1
    return math.expm1(power_sum(pmf, alpha, tol).log_total) / (1.0 - alpha)


# ---------------------------------------------------------------------------
# Fisher information
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FisherReport:
    """Score vector and information of a pmf window.

    ``score`` is evaluated on ``support_start, support_start + 1, ...``. For a
    COM-type report it is the order-adjusted score
    ``1 - (P(x-1)/P(x))**(1/nu)``, which coincides with the plain score of the
    order-``1/nu`` transform.
    """

    score: np.ndarray
    fisher_info: float
    rsp: bool
    nu: float = 1.0
    com_fisher_info: Optional[float] = None
    neglected_mass: float = 0.0
    support_start: int = 0

    def to_dict(self) -> dict:
        return {
            "fisher_info": self.fisher_info,
            "com_fisher_info": self.com_fisher_info,
            "rsp": self.rsp,
            "nu": self.nu,
            "neglected_mass": self.neglected_mass,
        }


def is_rsp(probs: np.ndarray) -> bool:
    """Right-side positivity on the window: P(x) > 0 implies P(x+1) > 0."""
    probs = np.asarray(probs)
    return bool(np.all((probs[:-1] == 0) | (probs[1:] > 0)))


def _score_terms(probs: np.ndarray):
    prev = np.concatenate([[0.0], probs[:-1]])
    pos = probs > 0
    safe = np.where(pos, probs, 1.0)
    score = np.where(pos, 1.0 - prev / safe, 0.0)
    # J**2 P written as (P - prev)**2 / P so huge ratios in the far tail never overflow
    contrib = np.where(pos, (probs - prev) ** 2 / safe, 0.0)
    return score, contrib


def score_and_fisher(pmf: TruncatedPmf) -> FisherReport:
    """Kagan score ``J(x) = 1 - P(x-1)/P(x)`` and ``I = E J**2`` over the window.

    Mass below ``support_start`` is taken as zero, so ``J = 1`` at the left
    edge. Trailing zeros (underflow) are dropped before evaluation.

    Examples
    --------
    >>> from compoisson.kernels import poisson_pmf
    >>> round(score_and_fisher(poisson_pmf(2.0)).fisher_info, 10)
    0.5
    """
    pmf = pmf.trimmed()
    score, contrib = _score_terms(pmf.probs)
    info = math.fsum(contrib)
    if not math.isfinite(info):
        raise InfiniteInformationError("Fisher information is not finite on the window")
    return FisherReport(
        score=score,
        fisher_info=info,
        rsp=is_rsp(pmf.probs),
        neglected_mass=pmf.tail_bound,
        support_start=pmf.support_start,
    )


def com_fisher_info(pmf: TruncatedPmf, nu: float, tol: float = DEFAULT_TOL) -> FisherReport:
    """COM-type Fisher information: the plain information of the order-``1/nu`` transform."""
    if not (math.isfinite(nu) and nu > 0):
        raise ParameterError(f"nu must be a positive real (got {nu})")
    base = score_and_fisher(pmf)
    transformed = score_and_fisher(com_type(pmf, 1.0 / nu, tol).pmf)
    return FisherReport(
        score=transformed.score,
        fisher_info=base.fisher_info,
        rsp=transformed.rsp,
        nu=nu,
        com_fisher_info=transformed.fisher_info,
        neglected_mass=max(base.neglected_mass, transformed.neglected_mass),
        support_start=transformed.support_start,
    )


def com_fisher_info_direct(pmf: TruncatedPmf, nu: float, tol: float = DEFAULT_TOL) -> float:
    """Same quantity through the original law's ratios.

    ``sum_x (1 - (P(x-1)/P(x))**(1/nu))**2 * Q(x)`` with ``Q`` the
    order-``1/nu`` transform; useful as an independent cross-check.
    """
    q = com_type(pmf, 1.0 / nu, tol).pmf.probs
    p = pmf.probs
    prev = np.concatenate([[0.0], p[:-1]])
    pos = p > 0
    ratio = np.where(pos, prev / np.where(pos, p, 1.0), 0.0)
    k = np.where(pos, 1.0 - ratio ** (1.0 / nu), 0.0)
    return math.fsum(k * k * q)


class StamGap(NamedTuple):
    gap: float
    lhs: float
    rhs: float


def stam_gap(pmf_x: TruncatedPmf, pmf_y: TruncatedPmf, nu: float,
             tol: float = DEFAULT_TOL) -> StamGap:
    """Gap in the reciprocal-information inequality at COM order ``nu``.

    Both inputs are mapped to their order-``1/nu`` transforms ``X'``, ``Y'``;
    then ``lhs = 1 / I(X' + Y')`` and ``rhs = 1 / I(X') + 1 / I(Y')`` with
    ``I`` the discrete Fisher information. The gap is non-negative for
    right-side-positive inputs and vanishes for (shifted) CMP pairs of order
    ``nu``.
    """
    xs = com_type(pmf_x, 1.0 / nu, tol).pmf.trimmed()
    ys = com_type(pmf_y, 1.0 / nu, tol).pmf.trimmed()
    for name, law in (("X", xs), ("Y", ys)):
        if not is_rsp(law.probs):
            raise RSPViolationError(f"order-1/nu transform of {name} is not right-side positive on its window")
    zs = convolve(xs, ys)
    infos = [score_and_fisher(law).fisher_info for law in (xs, ys, zs)]
    if any(not (0 < i < math.inf) for i in infos):
        raise InfiniteInformationError(f"informations must be positive and finite (got {infos})")
    ix, iy, iz = infos
    lhs = 1.0 / iz
    rhs = 1.0 / ix + 1.0 / iy
    return StamGap(lhs - rhs, lhs, rhs)


__all__ = [
    "FisherReport",
    "StamGap",
    "com_fisher_info",
    "com_fisher_info_direct",
    "is_rsp",
    "renyi_entropy",
    "score_and_fisher",
    "stam_gap",
    "tsallis_entropy",
]
