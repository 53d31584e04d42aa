"""Log-domain pmfs and normalizing constants for the COM-Poisson family.

Every series is summed on a finite window whose tail is certified by a
geometric (or, for zeta-type weights, polynomial) majorant, so each returned
``TruncatedPmf`` carries an honest bound on the mass it does not store.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.special import gammaln

from .errors import DivergenceError, NumericRangeError, ParameterError, TailTooHeavyError
from .pmf import DEFAULT_TOL, TruncatedPmf

MAX_TERMS = 20_000_000
_LOG_FLOAT_MAX = math.log(np.finfo(float).max)
# CMNB / ECOMP certification: ratio must stay below 1 - _STREAK_GAP for _STREAK terms
_STREAK = 50
_STREAK_GAP = 1e-6
# windows are summed to this relative accuracy before being cut back to the caller's tol
_FINE_TOL = 1e-17


# ---------------------------------------------------------------------------
# parameter records
# ---------------------------------------------------------------------------


def _require(cond: bool, message: str):
    if not cond:
        raise ParameterError(message)


def _check_tol(tol: float):
    _require(0 < tol <= 1e-3, f"tol must lie in (0, 1e-3] (got {tol})")


@dataclass(frozen=True)
class CmpParams:
    """CMP(lambda, nu): weights lambda**k / (k!)**nu."""

    lam: float
    nu: float

    def __post_init__(self):
        _require(math.isfinite(self.lam) and self.lam > 0, f"lambda > 0 required (got {self.lam})")
        _require(math.isfinite(self.nu) and self.nu > 0, f"nu > 0 required (got {self.nu})")

    @property
    def mu(self) -> float:
        """lambda**(1/nu), the Poisson rate of the order-1/nu COM-type law."""
        return self.lam ** (1.0 / self.nu)


@dataclass(frozen=True)
class CmbParams:
    m: int
    p: float
    nu: float

    def __post_init__(self):
        _require(int(self.m) == self.m and self.m >= 0, f"m >= 0 integer required (got {self.m})")
        _require(0 < self.p < 1, f"0 < p < 1 required (got {self.p})")
        _require(math.isfinite(self.nu) and self.nu > 0, f"nu > 0 required (got {self.nu})")


@dataclass(frozen=True)
class CmnbParams:
    r: float
    nu: float
    p: float

    def __post_init__(self):
        _require(math.isfinite(self.r) and self.r > 0, f"r > 0 required (got {self.r})")
        _require(math.isfinite(self.nu) and self.nu > 0, f"nu > 0 required (got {self.nu})")
        # term ratio tends to p, so p < 1 is exactly the convergence condition
        _require(0 < self.p < 1, f"0 < p < 1 required (got {self.p})")


@dataclass(frozen=True)
class EcompParams:
    """Extended COM-Poisson: weights Gamma(r+k)**beta * theta**k / (k!)**alpha."""

    r: float
    theta: float
    alpha: float
    beta: float

    def __post_init__(self):
        ok_a = self.r >= 0 and self.theta > 0 and self.alpha > self.beta
        ok_b = self.r > 0 and 0 < self.theta < 1 and self.alpha == self.beta
        _require(
            ok_a or ok_b,
            "ECOMP parameter space is (r >= 0, theta > 0, alpha > beta) or "
            f"(r > 0, 0 < theta < 1, alpha == beta); got r={self.r}, theta={self.theta}, "
            f"alpha={self.alpha}, beta={self.beta}",
        )


@dataclass(frozen=True)
class SeriesSpec:
    """A power series with non-negative weights ``exp(log_weight(k))``.

    Exactly one tail certificate should be supplied: ``ratio_sup(k)`` bounding
    ``w[j+1] / w[j]`` for all ``j >= k`` (geometric), or ``tail_power`` ``s > 1``
    such that ``w[k] * k**s`` is non-increasing (polynomial). Without either,
    an empirical ratio test over the last terms is used.
    """

    log_weight: Callable[[np.ndarray], np.ndarray]
    name: str
    support_start: int = 0
    ratio_sup: Optional[Callable[[np.ndarray], np.ndarray]] = None
    tail_power: Optional[float] = None
    params: dict = field(default_factory=dict)


def zeta_series(sigma: float) -> SeriesSpec:
    _require(sigma > 1, f"zeta series needs sigma > 1 (got {sigma})")
    return SeriesSpec(
        log_weight=lambda k: -sigma * np.log(k),
        name="zeta",
        support_start=1,
        tail_power=sigma,
        params={"sigma": sigma},
    )


def lerch_series(rho: float, c: float, nu: float = 1.0) -> SeriesSpec:
    """Weights rho**k / (c + k)**nu, k >= 0 (Lerch transcendent terms)."""
    _require(0 < rho < 1, f"0 < rho < 1 required (got {rho})")
    _require(c > 0, f"c > 0 required (got {c})")
    _require(nu > 0, f"nu > 0 required (got {nu})")
    return SeriesSpec(
        log_weight=lambda k: k * math.log(rho) - nu * np.log(c + k),
        name="lerch",
        # (c+k)/(c+k+1) < 1, so the ratio never exceeds rho
        ratio_sup=lambda k: np.full(np.shape(k), rho),
        params={"rho": rho, "c": c, "nu": nu},
    )


def hyper_poisson_series(a: float, lam: float, nu: float = 1.0) -> SeriesSpec:
    """Weights (lam**k / Gamma(a + k + 1))**nu, the shifted COM-Poisson."""
    _require(a >= 0, f"a >= 0 required (got {a})")
    _require(lam > 0, f"lambda > 0 required (got {lam})")
    _require(nu > 0, f"nu > 0 required (got {nu})")
    return SeriesSpec(
        log_weight=lambda k: nu * (k * math.log(lam) - gammaln(a + k + 1)),
        name="hyper-poisson",
        ratio_sup=lambda k: (lam / (a + k + 1)) ** nu,
        params={"a": a, "lambda": lam, "nu": nu},
    )


# ---------------------------------------------------------------------------
# certified summation
# ---------------------------------------------------------------------------


class _Window(NamedTuple):
    w: np.ndarray  # scaled weights, at most 1 over the window
    log_shift: float  # log of the scale; absolute weight = w * exp(log_shift)
    total: float  # compensated window sum of w
    tail_rel: float  # certified tail / window sum
    end_ratio: Optional[float]  # geometric envelope at the last term
    terms_summed: int  # terms behind ``total``, beyond the stored ones
    sum_tail_rel: float  # certified tail of ``total`` / ``total``

    @property
    def probs(self) -> np.ndarray:
        return self.w / self.total

    @property
    def log_sum(self) -> float:
        return self.log_shift + math.log(self.total)


def _from_log(lw: np.ndarray):
    shift = float(np.max(lw))
    return np.exp(lw - shift), shift


def _anchored(log_ratio: np.ndarray, anchor: int) -> np.ndarray:
    """Weights from consecutive log ratios, equal to 1 at ``anchor``.

    ``log_ratio[i]`` is ``log(w[i+1] / w[i])``. Multiplying outward from the
    anchor makes every consecutive ratio exact to a few ulps, whatever the
    magnitude of the weights; terms below the double range become 0.
    """
    n = log_ratio.size + 1
    w = np.empty(n)
    w[anchor] = 1.0
    w[anchor + 1:] = np.cumprod(np.exp(log_ratio[anchor:]))
    if anchor:
        w[:anchor] = np.cumprod(np.exp(-log_ratio[:anchor][::-1]))[::-1]
    return w


def _run_length(good: np.ndarray) -> np.ndarray:
    """Length of the run of True values ending at each index."""
    idx = np.arange(good.size)
    last_bad = np.maximum.accumulate(np.where(~good, idx, -1))
    return idx - last_bad


def _geometric_window(weights, ratio_sup, start, tol, first_ok=None, streak=0,
                      initial=64, max_terms=MAX_TERMS) -> _Window:
    """Certified window whose neglected mass is at most ``tol``.

    The sum is first carried until ``w_K * rho / (1 - rho)`` is below
    ``_FINE_TOL`` of the partial sum, so the total is good to the last bit.
    The stored window is then cut at the first admissible index whose
    remaining mass (stored terms past it plus the envelope) is below ``tol``.
    ``weights(k)`` returns ``(w, log_shift)`` with ``max(w) <= 1``.
    """
    fine = min(tol, _FINE_TOL)
    n = max(int(initial), 2)
    while True:
        k = np.arange(start, start + n)
        w, shift = weights(k)
        partial = np.cumsum(w)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            rho = np.asarray(ratio_sup(k), dtype=float)
            bound = np.where(rho < 1, w * rho / (1 - rho), np.inf)
        ok = rho < 1
        if first_ok is not None:
            ok &= k >= first_ok
        if streak:
            ok &= _run_length(rho < 1 - _STREAK_GAP) >= streak
        hits = np.flatnonzero(ok & (bound <= fine * partial))
        if hits.size:
            end = int(hits[0])
            total = math.fsum(w[: end + 1])
            # remaining mass past each index, relative to the full sum
            rest = (np.cumsum(w[end:0:-1])[::-1] + bound[end]) / total
            rest = np.append(rest, bound[end] / total)
            i = int(np.flatnonzero(ok[: end + 1] & (rest <= tol))[0])
            tail = (math.fsum(w[i + 1: end + 1]) + float(bound[end])) / total
            return _Window(w[: i + 1], shift, total, tail, float(rho[i]), end + 1, float(bound[end]) / total)
        if n >= max_terms:
            raise DivergenceError(
                f"tail not certified below tol={tol} within {max_terms} terms"
            )
        n = min(2 * n, max_terms)


def _cmp_mode(lam: float, nu: float) -> int:
    return int(math.floor(math.exp(math.log(lam) / nu)))


def _cmp_weights(lam: float, nu: float):
    log_lam = math.log(lam)
    mode = _cmp_mode(lam, nu)

    def weights(k: np.ndarray):
        # k is always 0..K here; the weight at the anchor is lambda**a / (a!)**nu
        anchor = min(mode, k.size - 1)
        w = _anchored(log_lam - nu * np.log(k[1:]), anchor)
        return w, anchor * log_lam - nu * math.lgamma(anchor + 1)

    return weights


def _cmp_window(params: CmpParams, tol: float, min_terms: int = 0) -> _Window:
    _check_tol(tol)
    log_mode = math.log(params.lam) / params.nu
    if log_mode > math.log(MAX_TERMS / 4):
        raise NumericRangeError(
            f"mode lambda**(1/nu) = exp({log_mode:.1f}) is too large to sum term by term"
        )
    mode = math.exp(log_mode)
    initial = max(int(mode + 12 * math.sqrt(mode / params.nu + 1) + 32), min_terms)
    # beyond k > mode the ratio lambda/(k+1)**nu is decreasing, so it is its own sup
    return _geometric_window(
        _cmp_weights(params.lam, params.nu),
        lambda k: params.lam / (k + 1.0) ** params.nu,
        start=0,
        tol=tol,
        first_ok=max(mode, min_terms - 1),
        initial=initial,
    )


# ---------------------------------------------------------------------------
# normalizing constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormalizerResult:
    value: float  # math.inf if not representable; see log_value
    tail_bound: float  # absolute bound on the neglected series tail
    terms_used: int
    log_value: float


def log_normalizer_series(params: CmpParams, tol: float = DEFAULT_TOL) -> NormalizerResult:
    """Z(lambda, nu) as a log-domain certified sum; never overflows."""
    win = _cmp_window(params, tol)
    log_z = win.log_sum
    value = math.exp(log_z) if log_z < _LOG_FLOAT_MAX else math.inf
    return NormalizerResult(value, value * win.sum_tail_rel, win.terms_summed, log_z)


def normalizer_series(params: CmpParams, tol: float = DEFAULT_TOL) -> NormalizerResult:
    """Z(lambda, nu) = sum_k lambda**k / (k!)**nu.

    Raises NumericRangeError when Z itself overflows a double; use
    ``log_normalizer_series`` for such parameters.
    """
    res = log_normalizer_series(params, tol)
    if not math.isfinite(res.value):
        raise NumericRangeError(
            f"Z(lambda={params.lam}, nu={params.nu}) = exp({res.log_value:.1f}) overflows"
        )
    return res


def log_normalizer_asymptotic(params: CmpParams) -> float:
    lam, nu = params.lam, params.nu
    return (
        nu * lam ** (1.0 / nu)
        - (nu - 1.0) / (2.0 * nu) * math.log(lam)
        - (nu - 1.0) / 2.0 * math.log(2.0 * math.pi)
        - 0.5 * math.log(nu)
    )


def normalizer_asymptotic(params: CmpParams) -> float:
    """Leading large-lambda approximation to Z(lambda, nu)."""
    log_z = log_normalizer_asymptotic(params)
    if log_z >= _LOG_FLOAT_MAX:
        raise NumericRangeError(f"asymptotic Z = exp({log_z:.1f}) overflows")
    return math.exp(log_z)


# ---------------------------------------------------------------------------
# pmfs
# ---------------------------------------------------------------------------


def _cmp_ratio(params: CmpParams, k: int) -> float:
    """lambda / (k+1)**nu, the ratio P(k+1)/P(k), without overflow."""
    return math.exp(min(math.log(params.lam) - params.nu * math.log(k + 1.0), 700.0))


def cmp_pmf(params: CmpParams, k_max: Optional[int] = None, tol: float = DEFAULT_TOL) -> TruncatedPmf:
    """CMP pmf on 0..k_max; by default k_max is the certified truncation index."""
    if k_max is not None:
        _require(int(k_max) == k_max and k_max >= 0, f"k_max >= 0 integer required (got {k_max})")
        k_max = int(k_max)
    # the window is built with at least k_max + 1 terms, so it always covers k_max
    win = _cmp_window(params, tol, min_terms=0 if k_max is None else k_max + 1)
    if k_max is None:
        k_max = win.w.size - 1
    all_probs = win.probs
    probs = all_probs[: k_max + 1]
    tail = math.fsum(all_probs[k_max + 1:]) + win.tail_rel
    rho_end = _cmp_ratio(params, k_max)
    return TruncatedPmf(
        0,
        probs,
        tail,
        tol,
        meta={
            "family": "cmp",
            "params": {"lambda": params.lam, "nu": params.nu},
            "log_normalizer": win.log_sum,
        },
        tail_ratio=rho_end if rho_end < 1 else None,
    )


def poisson_pmf(mu: float, k_max: Optional[int] = None, tol: float = DEFAULT_TOL) -> TruncatedPmf:
    pmf = cmp_pmf(CmpParams(mu, 1.0), k_max, tol)
    return replace(pmf, meta=dict(pmf.meta, family="poisson", params={"lambda": mu}))


def geometric_pmf(p: float, tol: float = DEFAULT_TOL, k_max: Optional[int] = None) -> TruncatedPmf:
    """P(X = x) = p (1 - p)**x on x >= 0, stored exactly; tail is (1-p)**(K+1)."""
    _require(0 < p < 1, f"0 < p < 1 required (got {p})")
    q = 1.0 - p
    if k_max is None:
        k_max = max(int(math.ceil(math.log(tol) / math.log(q))) - 1, 0)
    x = np.arange(k_max + 1)
    return TruncatedPmf(
        0,
        p * q ** x,
        q ** (k_max + 1),
        tol,
        meta={"family": "geometric", "params": {"p": p}},
        tail_ratio=q,
    )


def cmb_pmf(params: CmbParams) -> TruncatedPmf:
    """COM-binomial pmf on 0..m (exact, no tail)."""
    m, p, nu = int(params.m), params.p, params.nu
    k = np.arange(m + 1)
    lw = nu * (math.lgamma(m + 1) - gammaln(k + 1) - gammaln(m - k + 1))
    lw = lw + k * math.log(p) + (m - k) * math.log1p(-p)
    lw -= lw.max()
    w = np.exp(lw)
    return TruncatedPmf(
        0,
        w / math.fsum(w),
        0.0,
        meta={"family": "cmb", "params": {"m": m, "p": p, "nu": nu}},
    )


def _ecomp_window(r, theta, alpha, beta, tol, family, params_meta) -> TruncatedPmf:
    _check_tol(tol)
    start = 1 if (r == 0 and beta != 0) else 0
    log_theta = math.log(theta)

    def log_ratio(k):
        # log(w[k+1] / w[k])
        gam = beta * np.log(r + k) if beta != 0 else 0.0
        return gam - alpha * np.log(k + 1.0) + log_theta

    def weights(k):
        t = log_ratio(k[:-1])
        naive = np.concatenate([[0.0], np.cumsum(t)])
        return _anchored(t, int(np.argmax(naive))), 0.0

    if alpha > beta:
        mono_from = max(0.0, (beta - alpha * r) / (alpha - beta))
        limit = 0.0
    else:
        mono_from, limit = 0.0, theta

    def ratio_sup(k):
        return np.where(k >= mono_from, np.maximum(np.exp(log_ratio(k)), limit), np.inf)

    win = _geometric_window(weights, ratio_sup, start, tol, streak=_STREAK,
                            initial=max(64, int(mono_from) + 2 * _STREAK))
    return TruncatedPmf(
        start,
        win.probs,
        win.tail_rel,
        tol,
        meta={"family": family, "params": params_meta},
        tail_ratio=win.end_ratio if win.end_ratio < 1 else None,
    )


def cmnb_pmf(params: CmnbParams, tol: float = DEFAULT_TOL) -> TruncatedPmf:
    """COM-negative-binomial pmf, weights (Gamma(r+k) / (k! Gamma(r)))**nu p**k."""
    return _ecomp_window(
        params.r, params.p, params.nu, params.nu, tol, "cmnb",
        {"r": params.r, "nu": params.nu, "p": params.p},
    )


def ecomp_pmf(params: EcompParams, tol: float = DEFAULT_TOL) -> TruncatedPmf:
    """Extended COM-Poisson pmf normalized from k = 0.

    With r = 0 and beta != 0 the k = 0 weight Gamma(0)**beta is undefined,
    and the support starts at 1.
    """
    return _ecomp_window(
        params.r, params.theta, params.alpha, params.beta, tol, "ecomp",
        {"r": params.r, "theta": params.theta, "alpha": params.alpha, "beta": params.beta},
    )


def power_series_pmf(spec: SeriesSpec, tol: float = DEFAULT_TOL,
                     max_terms: int = 4_000_000) -> TruncatedPmf:
    """Normalized pmf proportional to the weights of ``spec``."""
    _check_tol(tol)
    start = spec.support_start
    tail_ratio = tail_power = None
    if spec.ratio_sup is not None:
        win = _geometric_window(lambda k: _from_log(spec.log_weight(k)), spec.ratio_sup,
                                start, tol, max_terms=max_terms)
        probs, tail_rel, tail_ratio = win.probs, win.tail_rel, win.end_ratio
    elif spec.tail_power is not None:
        probs, tail_rel = _power_window(spec, tol, max_terms)
        tail_power = spec.tail_power
    else:
        probs, tail_rel, tail_ratio = _ratio_test_window(spec, tol, max_terms)
    return TruncatedPmf(
        start,
        probs,
        tail_rel,
        tol,
        meta={"family": spec.name, "params": dict(spec.params)},
        tail_ratio=tail_ratio,
        tail_power=tail_power,
    )


def _power_window(spec: SeriesSpec, tol: float, max_terms: int):
    s = spec.tail_power
    _require(s > 1, f"tail_power must exceed 1 for a finite sum (got {s})")
    start = max(spec.support_start, 1)
    n = 1024
    while True:
        k = np.arange(start, start + n)
        lw = spec.log_weight(k)
        lw = lw - lw.max()
        w = np.exp(lw)
        partial = np.cumsum(w)
        # sum_{j>K} w_j <= w_K K**s * int_K^inf x**-s dx = w_K K / (s - 1)
        bound = w * k / (s - 1)
        hits = np.flatnonzero(bound <= tol * partial)
        if hits.size:
            i = int(hits[0])
            total = math.fsum(w[: i + 1])
            return w[: i + 1] / total, float(bound[i]) / total
        if n >= max_terms:
            raise DivergenceError(
                f"{spec.name}: polynomial tail not below tol={tol} within {max_terms} terms; "
                "loosen tol or raise max_terms"
            )
        n = min(4 * n, max_terms)


def _ratio_test_window(spec: SeriesSpec, tol: float, max_terms: int):
    """Empirical certificate: the last ``_STREAK`` ratios are below 1 and non-increasing."""
    start = spec.support_start
    n = 256
    while True:
        k = np.arange(start, start + n)
        lw = spec.log_weight(k)
        lw = lw - lw.max()
        ratio = np.exp(np.diff(lw))
        good = (ratio < 1 - _STREAK_GAP) & (np.diff(ratio, prepend=np.inf) <= 0)
        run = _run_length(good)
        w = np.exp(lw[:-1])
        partial = np.cumsum(w)
        with np.errstate(divide="ignore", invalid="ignore"):
            bound = np.where(ratio < 1, w * ratio / (1 - ratio), np.inf)
        hits = np.flatnonzero((run >= _STREAK) & (bound <= tol * partial))
        if hits.size:
            i = int(hits[0])
            total = math.fsum(w[: i + 1])
            return w[: i + 1] / total, float(bound[i]) / total, float(ratio[i])
        if n >= max_terms:
            raise DivergenceError(f"{spec.name}: ratio test failed within {max_terms} terms")
        n = min(4 * n, max_terms)


# ---------------------------------------------------------------------------
# moments and sampling
# ---------------------------------------------------------------------------


class CmpMoments(NamedTuple):
    mean: float
    variance: float
    mean_approx: float


def cmp_moments(params: CmpParams, tol: float = DEFAULT_TOL) -> CmpMoments:
    """Exact (windowed) mean and variance plus lambda**(1/nu) - (nu-1)/(2 nu)."""
    pmf = cmp_pmf(params, tol=tol)
    approx = params.mu - (params.nu - 1.0) / (2.0 * params.nu)
    return CmpMoments(pmf.mean(), pmf.variance(), approx)


def rng(seed: int) -> np.random.Generator:
    """The package's generator: numpy PCG64 seeded through SeedSequence."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def sample(pmf: TruncatedPmf, n: int, seed: int) -> np.ndarray:
    """n i.i.d. draws by inversion of the window CDF."""
    if pmf.tail_bound >= 1e-9:
        raise TailTooHeavyError(
            f"tail_bound {pmf.tail_bound:.3g} >= 1e-9; widen the window before sampling"
        )
    _require(int(n) == n and n >= 0, f"n >= 0 integer required (got {n})")
    cdf = np.cumsum(pmf.probs)
    cdf /= cdf[-1]
    u = rng(seed).random(int(n))
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
    return pmf.support_start + idx
