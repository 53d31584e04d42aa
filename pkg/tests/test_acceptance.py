"""Acceptance suite: one test per criterion, each timed against its runtime budget.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary ends with
one PASS/FAIL line per criterion. ``python3 tests/test_acceptance.py`` does
the same.
"""

import math
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from compoisson import (
    CmbParams,
    CmpParams,
    QueueConfig,
    a_sequence,
    closure_test,
    cmb_pmf,
    cmp_moments,
    cmp_pmf,
    com_type,
    conditional_given_sum,
    dpcp_reconstruct,
    dpcp_recover,
    geometric_pmf,
    limit_cmb_to_cmp,
    limit_cmnb_to_cmp,
    normalizer_series,
    pgf_min_modulus,
    poisson_pmf,
    power_series_pmf,
    queue_exact_steady_state,
    queue_simulate,
    rao_rubin_gap,
    renyi_entropy,
    score_and_fisher,
    stam_gap,
    stein_residual,
    tsallis_entropy,
    zeta_series,
)

GRID = (0.5, 1.0, 3.0)


@contextmanager
def budget(seconds):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    assert elapsed < seconds, f"took {elapsed:.2f}s, budget {seconds}s"


def max_abs_diff(a, b):
    n = max(a.last, b.last) + 1
    return float(np.max(np.abs(a.padded(0, n) - b.padded(0, n))))


@pytest.mark.criterion(1, "normalizer series vs brute force and exp")
def test_criterion_01_normalizer():
    # exact rational sum of 1/(i!)^2, rounded once
    oracle = float(sum(Fraction(1, math.factorial(i) ** 2) for i in range(201)))
    assert np.isclose(oracle, 2.2795853023, atol=1e-10)
    with budget(1.0):
        bessel = normalizer_series(CmpParams(1.0, 2.0)).value
        exps = {lam: normalizer_series(CmpParams(lam, 1.0)).value for lam in (0.5, 2.0, 10.0)}
    assert abs(bessel - oracle) < 1e-10
    for lam, z in exps.items():
        # relative: e^10 has ulp ~4e-12, so an absolute 1e-12 is below double resolution
        assert abs(z / math.exp(lam) - 1) < 1e-12


@pytest.mark.criterion(2, "CMP recurrence on 20 random pairs")
def test_criterion_02_recurrence():
    gen = np.random.default_rng(20240611)
    pairs = list(zip(gen.uniform(0.1, 20.0, 20), gen.uniform(0.3, 3.0, 20)))
    tiny = np.finfo(float).tiny
    worst = 0.0
    with budget(1.0):
        for lam, nu in pairs:
            probs = cmp_pmf(CmpParams(lam, nu)).probs
            k = np.arange(1, probs.size)
            normal = probs[:-1] >= tiny
            res = np.abs(probs[1:] * k ** nu - lam * probs[:-1])[normal] / probs[:-1][normal]
            worst = max(worst, float(res.max()))
    assert worst < 1e-12


@pytest.mark.criterion(3, "conditional law of X given X+Y equals CMB")
def test_criterion_03_conditional():
    worst = 0.0
    with budget(5.0):
        for l1 in GRID:
            for l2 in GRID:
                for nu in (0.5, 1.0, 2.0):
                    x = cmp_pmf(CmpParams(l1, nu), k_max=15)
                    y = cmp_pmf(CmpParams(l2, nu), k_max=15)
                    for s in range(16):
                        ref = cmb_pmf(CmbParams(s, l1 / (l1 + l2), nu)).probs
                        worst = max(worst, float(np.max(np.abs(conditional_given_sum(x, y, s) - ref))))
    assert worst < 1e-12


@pytest.mark.criterion(4, "Rao-Rubin gap for CMP inputs and geometric")
def test_criterion_04_rao_rubin():
    # X = CMP(l1 + l2, nu) damaged by CMB(z, l1 / (l1 + l2), nu), taken literally
    gaps = {}
    with budget(5.0):
        for l1 in GRID:
            for l2 in GRID:
                for nu in (0.5, 1.0, 2.0):
                    x = cmp_pmf(CmpParams(l1 + l2, nu), tol=1e-15)
                    gaps[(l1, l2, nu)] = rao_rubin_gap(x, l1 / (l1 + l2), nu)
        geometric = rao_rubin_gap(geometric_pmf(0.5, tol=1e-15), 0.5, 1.0)
    assert geometric > 1e-3
    worst = max(gaps.values())
    worst_at = max(gaps, key=gaps.get)
    assert worst < 1e-10, f"max gap {worst:.3g} at (l1, l2, nu) = {worst_at}"


@pytest.mark.criterion(5, "Stam gap equality and inequality cases")
def test_criterion_05_stam():
    with budget(10.0):
        gaps = [stam_gap(poisson_pmf(a, tol=1e-15), poisson_pmf(b, tol=1e-15), 1.0).gap
                for a, b in ((1.0, 1.0), (0.5, 2.0), (3.0, 4.0))]
        for nu in (0.5, 2.0):
            for mu1, mu2 in ((1.0, 1.0), (0.5, 2.0)):
                x = cmp_pmf(CmpParams(mu1 ** nu, nu), tol=1e-30)
                y = cmp_pmf(CmpParams(mu2 ** nu, nu), tol=1e-30)
                gaps.append(stam_gap(x, y, nu).gap)
        geo = geometric_pmf(0.5, tol=1e-15)
        geo_gap = stam_gap(geo, geo, 1.0).gap
        infos = {lam: score_and_fisher(poisson_pmf(lam, tol=1e-15)).fisher_info for lam in (0.5, 1.0, 2.0, 5.0)}
    assert max(abs(g) for g in gaps) < 1e-8
    assert geo_gap > 1e-4
    for lam, info in infos.items():
        assert abs(info - 1.0 / lam) < 1e-10


@pytest.mark.criterion(6, "closure under addition holds iff nu = 1")
def test_criterion_06_closure():
    with budget(2.0):
        firsts = {nu: closure_test(1.0, 1.0, nu).first_violation_n for nu in (0.5, 0.9, 1.0, 1.1, 2.0)}
        a = a_sequence(1.0, 1.0, 2.0, 2)
    for nu, first in firsts.items():
        assert (first is None) == (nu == 1.0), (nu, first)
    assert abs(a[1] - 0.5) < 1e-12
    assert abs(a[2] - 0.375) < 1e-12


@pytest.mark.criterion(7, "Stein residual on CMP and geometric")
def test_criterion_07_stein():
    with budget(1.0):
        cmp_res = max(stein_residual(cmp_pmf(CmpParams(lam, nu)), lam, nu).max_residual
                      for lam in (0.5, 1.0, 2.0, 6.0) for nu in (0.5, 1.0, 2.0))
        geo_res = stein_residual(geometric_pmf(0.5), 1.0, 1.0).max_residual
    assert cmp_res < 1e-13
    assert geo_res > 0.05


@pytest.mark.criterion(8, "DPCP recovery, reconstruction and zero screen")
def test_criterion_08_dpcp():
    worst = 0.0
    with budget(10.0):
        for lam in (0.3, 0.8, 1.0):
            for nu in (0.5, 1.0, 2.0):
                pmf = cmp_pmf(CmpParams(lam, nu), k_max=60)
                params = dpcp_recover(pmf, 50)
                back = dpcp_reconstruct(params, 24)
                worst = max(worst, float(np.max(np.abs(back.probs - pmf.probs[:25]))))
                assert abs(params.alpha_sum - 1.0) < 1e-6
        pois = dpcp_recover(poisson_pmf(2.0, tol=1e-15), 10)
        # nu -> infinity: CMP(2, nu) tends to Bernoulli(2/3), pgf zero at z = -1/2
        screen = pgf_min_modulus(cmp_pmf(CmpParams(2.0, 1e6)), 256, 256)
    assert worst < 1e-10
    assert abs(pois.lambda_tilde - 2.0) < 1e-12
    assert abs(pois.alphas[0] - 1.0) < 1e-12
    assert np.all(np.abs(pois.alphas[1:]) < 1e-12)
    assert screen.min_mod < 0.01
    assert abs(screen.argmin_z - (-0.5)) < 0.02


@pytest.mark.criterion(9, "CMB and CMNB limit curves decrease to CMP")
def test_criterion_09_limits():
    with budget(30.0):
        curves = []
        for lam, nu in ((2.0, 1.0), (1.0, 2.0)):
            curves.append(limit_cmb_to_cmp(lam, nu, [10, 100, 1000]))
            curves.append(limit_cmnb_to_cmp(lam, nu, [5, 50, 500]))
    for curve in curves:
        assert curve.strictly_decreasing(), curve.to_dict()
        if curve.nu == 1.0:
            assert curve.tv[-1] < 0.01


@pytest.mark.criterion(10, "queue equilibrium: exact solver and simulation")
def test_criterion_10_queue():
    triples = [(a, s, nu) for a in (0.5, 2.0, 5.0) for s, nu in ((1.0, 1.0), (2.0, 0.5), (1.0, 2.0))]
    with budget(60.0):
        diffs = [max_abs_diff(queue_exact_steady_state(a, s, nu), cmp_pmf(CmpParams(a / s, nu)))
                 for a, s, nu in triples]
        sims = {nu: queue_simulate(QueueConfig(2.0, 1.0, nu, horizon=1e5, seed=11)) for nu in (1.0, 2.0)}
    assert len(triples) == 9
    assert max(diffs) < 1e-12
    for nu, est in sims.items():
        assert est.tv_to_cmp.upper < 0.02, (nu, est.tv_to_cmp)


@pytest.mark.criterion(11, "entropy identities for the COM-type normalizer")
def test_criterion_11_entropy():
    laws = [
        (cmp_pmf(CmpParams(1.3, 0.7), tol=1e-30), 1e-12),
        (geometric_pmf(0.3, tol=1e-30), 1e-12),
        # the polynomial tail of zeta cannot reach 1e-24 cheaply; 1e-3 still certifies it
        (power_series_pmf(zeta_series(6.0), tol=1e-10), 1e-3),
    ]
    worst = 0.0
    with budget(2.0):
        for alpha in (0.5, 2.0, 3.0):
            for law, tol in laws:
                out = com_type(law, alpha, tol).pmf
                # normalizing constant read off the transformed masses at the first point
                c = out.probs[0] / law.probs[0] ** alpha
                h_r = renyi_entropy(law, alpha, tol)
                h_t = tsallis_entropy(law, alpha, tol)
                worst = max(worst, abs(math.log(c) - (alpha - 1) * h_r), abs(c - 1 / (1 + (1 - alpha) * h_t)))
    assert worst < 1e-10


@pytest.mark.criterion(12, "mean approximation")
def test_criterion_12_mean():
    with budget(1.0):
        moments = {(lam, nu): cmp_moments(CmpParams(lam, nu)) for lam in (4.0, 10.0, 50.0) for nu in (1.0, 2.0)}
    for (lam, nu), m in moments.items():
        approx = lam ** (1 / nu) - (nu - 1) / (2 * nu)
        assert np.isclose(m.mean_approx, approx, rtol=0, atol=1e-14)
        assert abs(m.mean - approx) < 0.1
        if nu == 1.0:
            assert abs(m.mean - lam) < 1e-10


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
