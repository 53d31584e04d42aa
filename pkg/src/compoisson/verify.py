"""Deterministic suite of numeric characterization checks with a JSON report."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import __version__
from .characterizations import (
    a_sequence,
    closure_test,
    conditional_given_sum,
    convolve,
    limit_cmb_to_cmp,
    limit_cmnb_to_cmp,
    rao_rubin_gap,
    stein_residual,
    tv_distance,
)
from .dpcp import dpcp_reconstruct, dpcp_recover, pgf_min_modulus
from .information import renyi_entropy, score_and_fisher, stam_gap, tsallis_entropy
from .kernels import (
    CmbParams,
    CmpParams,
    cmb_pmf,
    cmp_moments,
    cmp_pmf,
    geometric_pmf,
    log_normalizer_asymptotic,
    log_normalizer_series,
    normalizer_series,
    poisson_pmf,
    power_series_pmf,
    rng,
    sample,
    zeta_series,
)
from .pmf import TruncatedPmf
from .queue import QueueConfig, queue_exact_steady_state, queue_simulate
from .transform import com_type


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    statistic: float
    tolerance: float
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "check": self.name,
            "pass": self.passed,
            "statistic": self.statistic,
            "tolerance": self.tolerance,
            "params": self.params,
        }


def _below(name, stat, tol, **params) -> Check:
    stat = float(stat)
    return Check(name, bool(stat < tol), stat, tol, dict(params, bound="upper"))


def _above(name, stat, tol, **params) -> Check:
    stat = float(stat)
    return Check(name, bool(stat > tol), stat, tol, dict(params, bound="lower"))


# each check takes the suite seed; most ignore it


def check_normalizer(seed: int) -> list[Check]:
    terms = [1.0]
    for i in range(1, 201):
        terms.append(terms[-1] / (i * i))
    oracle = math.fsum(terms)
    rel = max(abs(normalizer_series(CmpParams(lam, 1.0)).value / math.exp(lam) - 1) for lam in (0.5, 2, 10))
    return [
        _below("normalizer-bessel", abs(normalizer_series(CmpParams(1.0, 2.0)).value - oracle), 1e-10),
        _below("normalizer-exp", rel, 1e-12, lambdas=[0.5, 2, 10], relative=True),
        _below("normalizer-bernoulli-limit", abs(normalizer_series(CmpParams(3.0, 1e6)).value - 4.0), 1e-6),
    ]


def check_asymptotic(seed: int) -> list[Check]:
    worst = 0.0
    for nu in (0.5, 2.0, 3.0):
        errs = []
        for lam in (10.0, 100.0, 1000.0):
            p = CmpParams(lam, nu)
            errs.append(abs(math.expm1(log_normalizer_asymptotic(p) - log_normalizer_series(p).log_value)))
        # largest step ratio; strictly decreasing means every ratio is below 1
        worst = max(worst, max(b / a for a, b in zip(errs, errs[1:])))
    return [_below("normalizer-asymptotic-decreasing", worst, 1.0, nus=[0.5, 2, 3])]


def check_recurrence(seed: int) -> list[Check]:
    gen = rng(seed)
    worst = 0.0
    tiny = np.finfo(float).tiny
    for lam, nu in zip(gen.uniform(0.1, 20.0, 20), gen.uniform(0.3, 3.0, 20)):
        probs = cmp_pmf(CmpParams(float(lam), float(nu))).probs
        k = np.arange(1, probs.size)
        ok = probs[:-1] >= tiny
        res = np.abs(probs[1:] * k ** nu - lam * probs[:-1])[ok] / probs[:-1][ok]
        worst = max(worst, float(res.max(initial=0.0)))
    return [_below("recurrence", worst, 1e-12, pairs=20, seed=seed)]


def check_conditional(seed: int) -> list[Check]:
    worst = 0.0
    for l1 in (0.5, 1.0, 3.0):
        for l2 in (0.5, 1.0, 3.0):
            for nu in (0.5, 1.0, 2.0):
                x = cmp_pmf(CmpParams(l1, nu), k_max=15)
                y = cmp_pmf(CmpParams(l2, nu), k_max=15)
                for s in range(16):
                    ref = cmb_pmf(CmbParams(s, l1 / (l1 + l2), nu)).probs
                    worst = max(worst, float(np.max(np.abs(conditional_given_sum(x, y, s) - ref))))
    return [_below("conditional-cmb", worst, 1e-12, s_max=15)]


def check_rao_rubin(seed: int) -> list[Check]:
    # the damaged law equals the undamaged-conditional law exactly when the
    # undamaged variable is a sum CMP(theta p, nu) + CMP(theta (1-p), nu)
    worst_sum = worst_poisson = 0.0
    for l1 in (0.5, 1.0, 3.0):
        for l2 in (0.5, 1.0, 3.0):
            p = l1 / (l1 + l2)
            for nu in (0.5, 1.0, 2.0):
                x = convolve(cmp_pmf(CmpParams(l1, nu), tol=1e-15), cmp_pmf(CmpParams(l2, nu), tol=1e-15))
                worst_sum = max(worst_sum, rao_rubin_gap(x, p, nu))
            worst_poisson = max(worst_poisson, rao_rubin_gap(poisson_pmf(l1 + l2, tol=1e-15), p, 1.0))
    return [
        _below("rao-rubin-poisson", worst_poisson, 1e-10),
        _below("rao-rubin-cmp-sum", worst_sum, 1e-10),
        _above("rao-rubin-geometric", rao_rubin_gap(geometric_pmf(0.5, tol=1e-15), 0.5, 1.0), 1e-3),
    ]


def check_stam(seed: int) -> list[Check]:
    worst = abs(stam_gap(poisson_pmf(1.0, tol=1e-15), poisson_pmf(2.0, tol=1e-15), 1.0).gap)
    for nu in (0.5, 2.0):
        for mu1, mu2 in ((1.0, 1.0), (0.5, 2.0)):
            x = cmp_pmf(CmpParams(mu1 ** nu, nu), tol=1e-30)
            y = cmp_pmf(CmpParams(mu2 ** nu, nu), tol=1e-30)
            worst = max(worst, abs(stam_gap(x, y, nu).gap))
    fisher = max(abs(score_and_fisher(poisson_pmf(lam, tol=1e-15)).fisher_info - 1 / lam) for lam in (0.5, 1, 2, 5))
    geo = geometric_pmf(0.5, tol=1e-15)
    return [
        _below("stam-equality", worst, 1e-8, nus=[1, 0.5, 2]),
        _above("stam-geometric", stam_gap(geo, geo, 1.0).gap, 1e-4),
        _below("fisher-poisson", fisher, 1e-10),
    ]


def check_closure(seed: int) -> list[Check]:
    mismatches = sum(
        (closure_test(1.0, 1.0, nu).first_violation_n is None) != (nu == 1.0)
        for nu in (0.5, 0.9, 1.0, 1.1, 2.0)
    )
    a = a_sequence(1.0, 1.0, 2.0, 2)
    dichotomy = 0
    for lx in (0.5, 1.0, 3.0):
        for ly in (0.5, 1.0, 3.0):
            for nu in (0.5, 1.0, 2.0, 5.0):
                seq = a_sequence(lx, ly, nu, 30)[1:]
                if nu == 1.0:
                    dichotomy += int(np.any(np.abs(seq - 1) > 1e-12))
                else:
                    dichotomy += int(np.any(np.sign(seq - 1) != np.sign(1 - nu)))
    return [
        _below("closure-dichotomy", mismatches, 0.5, nus=[0.5, 0.9, 1, 1.1, 2]),
        _below("a-sequence-values", max(abs(a[1] - 0.5), abs(a[2] - 0.375)), 1e-12),
        _below("a-sequence-sign", dichotomy, 0.5, n_max=30),
    ]


def check_stein(seed: int) -> list[Check]:
    worst = max(stein_residual(cmp_pmf(CmpParams(lam, nu)), lam, nu).max_residual
                for lam in (0.5, 2.0, 6.0) for nu in (0.5, 1.0, 2.0))
    return [
        _below("stein-cmp", worst, 1e-13),
        _above("stein-geometric", stein_residual(geometric_pmf(0.5), 1.0, 1.0).max_residual, 0.05),
    ]


def check_dpcp(seed: int) -> list[Check]:
    worst = 0.0
    for lam in (0.3, 0.8, 1.0):
        for nu in (0.5, 1.0, 2.0):
            pmf = cmp_pmf(CmpParams(lam, nu), k_max=60)
            back = dpcp_reconstruct(dpcp_recover(pmf, 50), 24)
            worst = max(worst, float(np.max(np.abs(back.probs - pmf.probs[:25]))))
    alpha_sum = abs(dpcp_recover(cmp_pmf(CmpParams(0.8, 2.0), k_max=60), 50).alpha_sum - 1)
    pois = dpcp_recover(poisson_pmf(2.0, tol=1e-15), 10)
    pois_err = max(abs(pois.lambda_tilde - 2.0), abs(pois.alphas[0] - 1), float(np.max(np.abs(pois.alphas[1:]))))
    bern = cmp_pmf(CmpParams(2.0, 1e6))
    screen = pgf_min_modulus(bern, 256, 256)
    return [
        _below("dpcp-roundtrip", worst, 1e-10),
        _below("dpcp-alpha-sum", alpha_sum, 1e-6, n_terms=50),
        _below("dpcp-poisson", pois_err, 1e-12),
        _below("dpcp-bernoulli-zero", screen.min_mod, 0.01, argmin=[screen.argmin_z.real, screen.argmin_z.imag]),
    ]


def check_limits(seed: int) -> list[Check]:
    out = []
    for lam, nu in ((2.0, 1.0), (1.0, 2.0)):
        for curve in (limit_cmb_to_cmp(lam, nu, [10, 100, 1000]), limit_cmnb_to_cmp(lam, nu, [5, 50, 500])):
            steps = np.diff(curve.tv)
            name = f"limit-{curve.family}-lambda{lam:g}-nu{nu:g}"
            out.append(_below(name + "-decreasing", float(steps.max()), 0.0))
            if nu == 1.0:
                out.append(_below(name + "-final", curve.tv[-1], 0.01))
    return out


def check_queue(seed: int) -> list[Check]:
    worst = 0.0
    for arrival in (0.5, 2.0, 5.0):
        for service, nu in ((1.0, 1.0), (2.0, 0.5), (1.0, 2.0)):
            exact = queue_exact_steady_state(arrival, service, nu)
            ref = cmp_pmf(CmpParams(arrival / service, nu))
            n = max(exact.last, ref.last) + 1
            worst = max(worst, float(np.max(np.abs(exact.padded(0, n) - ref.padded(0, n)))))
    sims = [queue_simulate(QueueConfig(2.0, 1.0, nu, 1e5, 1e3, seed=seed)).tv_to_cmp.upper for nu in (1.0, 2.0)]
    return [
        _below("queue-exact", worst, 1e-12, triples=9),
        _below("queue-simulation", max(sims), 0.02, horizon=1e5, seed=seed),
    ]


def check_entropy(seed: int) -> list[Check]:
    laws = [
        cmp_pmf(CmpParams(1.3, 0.7), tol=1e-30),
        geometric_pmf(0.3, tol=1e-30),
        power_series_pmf(zeta_series(6.0), tol=1e-10),
    ]
    worst = 0.0
    for alpha in (0.5, 2.0, 3.0):
        for law in laws:
            tol = 1e-3 if law.meta["family"] == "zeta" else 1e-12
            c = com_type(law, alpha, tol).log_norm_const
            worst = max(
                worst,
                abs(c - (alpha - 1) * renyi_entropy(law, alpha, tol)),
                abs(math.exp(c) - 1 / (1 + (1 - alpha) * tsallis_entropy(law, alpha, tol))),
            )
    return [_below("entropy-identities", worst, 1e-10, alphas=[0.5, 2, 3])]


def check_mean(seed: int) -> list[Check]:
    worst = exact1 = 0.0
    for lam in (4.0, 10.0, 50.0):
        for nu in (1.0, 2.0):
            m = cmp_moments(CmpParams(lam, nu))
            gap = abs(m.mean - m.mean_approx)
            worst = max(worst, gap)
            if nu == 1.0:
                exact1 = max(exact1, gap)
    return [_below("mean-approximation", worst, 0.1), _below("mean-approximation-poisson", exact1, 1e-10)]


def check_sampling(seed: int) -> list[Check]:
    law = cmp_pmf(CmpParams(2.0, 1.5))
    draws = sample(law, 10 ** 6, seed)
    emp = TruncatedPmf(0, np.bincount(draws) / draws.size)
    return [_below("sampling-tv", tv_distance(emp, law).upper, 0.005, n=10 ** 6, seed=seed)]


def check_transform(seed: int) -> list[Check]:
    worst = 0.0
    laws = [cmp_pmf(CmpParams(1.3, 0.7), tol=1e-30), geometric_pmf(0.3, tol=1e-30)]
    for nu in (0.5, 2.0, 3.7):
        for law in laws:
            back = com_type(com_type(law, nu).pmf, 1 / nu).pmf
            worst = max(worst, float(np.max(np.abs(back.probs - law.probs))))
    geo = com_type(geometric_pmf(0.5), 2.0).pmf
    closed = 0.75 * 0.25 ** geo.support
    return [
        _below("transform-involution", worst, 1e-10, nus=[0.5, 2, 3.7]),
        _below("transform-geometric", float(np.max(np.abs(geo.probs - closed))), 1e-12),
    ]


CHECKS: dict[str, Callable[[int], list[Check]]] = {
    "normalizer": check_normalizer,
    "asymptotic": check_asymptotic,
    "recurrence": check_recurrence,
    "conditional": check_conditional,
    "rao-rubin": check_rao_rubin,
    "stam": check_stam,
    "closure": check_closure,
    "stein": check_stein,
    "dpcp": check_dpcp,
    "limits": check_limits,
    "queue": check_queue,
    "entropy": check_entropy,
    "mean": check_mean,
    "sampling": check_sampling,
    "transform": check_transform,
}


@dataclass(frozen=True)
class VerifyReport:
    checks: list
    seed: int
    version: str = __version__

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "checks": [c.to_dict() for c in self.checks],
            "overall": self.overall,
            "version": self.version,
            "seed": self.seed,
        }


def run_checks(names=None, seed: int = 0) -> VerifyReport:
    """Run the named check groups (all of them by default) in a fixed order."""
    names = list(CHECKS) if names is None else list(names)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown checks {unknown}; choose from {sorted(CHECKS)}")
    results: list[Check] = []
    for name in names:
        results.extend(CHECKS[name](seed))
    return VerifyReport(results, seed)


__all__ = ["CHECKS", "Check", "VerifyReport", "run_checks"]
