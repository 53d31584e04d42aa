import math

import mpmath as mp
import numpy as np
import pytest

from compoisson import (
    CmpParams,
    DpcpParams,
    ParameterError,
    PseudoParametersError,
    ZeroMassError,
    cmp_pmf,
    dcp_sample,
    dpcp_reconstruct,
    dpcp_recover,
    geometric_pmf,
    pgf_eval,
    pgf_min_modulus,
    point_mass,
    poisson_pmf,
)


def test_poisson_has_single_jump():
    params = dpcp_recover(poisson_pmf(3.0, tol=1e-15), 12)
    assert np.isclose(params.lambda_tilde, 3.0, atol=1e-12)
    assert np.allclose(params.alphas, np.eye(12)[0], atol=1e-12)


def test_geometric_has_logarithmic_jumps():
    # p q^x is compound Poisson with rate -log p and jump law q^k / (k (-log p))
    p, q = 0.4, 0.6
    params = dpcp_recover(geometric_pmf(p, tol=1e-15), 15)
    k = np.arange(1, 16)
    assert np.isclose(params.lambda_tilde, -math.log(p), rtol=1e-14)
    assert np.allclose(params.alphas, q ** k / (k * -math.log(p)), rtol=1e-12, atol=1e-16)
    assert params.sign_summary()["negative_count"] == 0


def _log_series_weights(lam, nu, n):
    """Weights from the power series of log Z(lam z) in 50-digit arithmetic."""
    with mp.workdps(50):
        a = [mp.mpf(lam) ** i / mp.factorial(i) ** nu for i in range(n + 1)]
        c = [mp.mpf(0)] * (n + 1)
        for k in range(1, n + 1):
            c[k] = a[k] - mp.fsum(j * c[j] * a[k - j] for j in range(1, k)) / k
        # the coefficients of log Z(lam z) sum to log Z(lam), the rate
        rate = mp.log(mp.nsum(lambda i: mp.mpf(lam) ** i / mp.factorial(i) ** nu, [0, mp.inf]))
        return float(rate), np.array([float(x / rate) for x in c[1:]])


def test_overdispersed_cmp_has_signed_weights():
    rate, alphas = _log_series_weights(0.3, 0.5, 8)
    params = dpcp_recover(cmp_pmf(CmpParams(0.3, 0.5), k_max=60), 8)
    assert np.isclose(params.lambda_tilde, rate, rtol=1e-13)
    assert np.allclose(params.alphas, alphas, rtol=1e-7, atol=1e-15)
    assert alphas[4] < -1e-6
    assert params.sign_summary()["first_negative_index"] == 5


@pytest.mark.parametrize("lam,nu", [(0.3, 0.5), (0.8, 1.0), (1.0, 2.0), (0.6, 3.0)])
def test_roundtrip(lam, nu):
    pmf = cmp_pmf(CmpParams(lam, nu), k_max=60)
    back = dpcp_reconstruct(dpcp_recover(pmf, 50), 30)
    assert np.max(np.abs(back.probs - pmf.probs[:31])) < 1e-12


def test_reconstruct_rejects_pseudo_law():
    with pytest.raises(PseudoParametersError):
        dpcp_reconstruct(DpcpParams(0.1, [1.5, -0.5]), 2)


def test_recover_edge_cases():
    with pytest.raises(ParameterError):
        dpcp_recover(point_mass(0), 5)
    with pytest.raises(ZeroMassError):
        dpcp_recover(point_mass(2), 5)
    with pytest.raises(ParameterError):
        dpcp_recover(poisson_pmf(1.0), 0)


def test_pgf_eval_closed_form():
    p = 0.3
    law = geometric_pmf(p, tol=1e-16)
    z = np.array([0.0, 0.5, -1.0, 0.3 + 0.4j, 1j])
    assert np.allclose(pgf_eval(law, z), p / (1 - (1 - p) * z), rtol=1e-14)
    with pytest.raises(ParameterError):
        pgf_eval(law, 1.5)


def test_pgf_of_cmp_is_normalizer_ratio():
    lam, nu = 0.8, 2.0
    with mp.workdps(30):
        def z_of(x):
            return mp.nsum(lambda i: mp.mpf(x) ** i / mp.factorial(i) ** nu, [0, mp.inf])

        ref = float(z_of(lam / 2) / z_of(lam))
    assert np.isclose(pgf_eval(cmp_pmf(CmpParams(lam, nu)), 0.5).real, ref, rtol=1e-13)


def test_log_pgf_matches_pgf():
    law = geometric_pmf(0.5, tol=1e-16)
    params = dpcp_recover(law, 200)
    z = np.array([0.2, -0.5, 0.4j])
    assert np.allclose(np.exp(params.log_pgf(z)), pgf_eval(law, z), rtol=1e-12)


def test_min_modulus_screen():
    bern = cmp_pmf(CmpParams(2.0, 1e6))
    res = pgf_min_modulus(bern)
    assert res.min_mod < 0.01 and abs(res.argmin_z + 0.5) < 0.01
    assert pgf_min_modulus(poisson_pmf(1.0)).min_mod > 0.1
    with pytest.raises(ParameterError):
        pgf_min_modulus(bern, 10, 10)


def test_sampling_matches_law():
    law = geometric_pmf(0.5, tol=1e-16)
    params = dpcp_recover(law, 60)
    draws = dcp_sample(params, 200_000, seed=3)
    assert np.array_equal(draws, dcp_sample(params, 200_000, seed=3))
    emp = np.bincount(draws, minlength=40)[:40] / draws.size
    assert 0.5 * np.abs(emp - law.probs[:40]).sum() < 0.01


def test_sampling_refuses_pseudo_and_unnormalized():
    with pytest.raises(PseudoParametersError):
        dcp_sample(DpcpParams(1.0, [1.2, -0.2]), 10, seed=0)
    with pytest.raises(ParameterError):
        dcp_sample(DpcpParams(1.0, [0.5, 0.2]), 10, seed=0)


def test_params_serialization():
    params = dpcp_recover(cmp_pmf(CmpParams(0.3, 0.5), k_max=40), 10)
    back = DpcpParams.from_dict(params.to_dict())
    assert back.lambda_tilde == params.lambda_tilde
    assert np.array_equal(back.alphas, params.alphas)
    with pytest.raises(ParameterError):
        DpcpParams.from_dict({"alphas": [1.0]})


def test_underdispersed_cmp_is_pseudo():
    params = dpcp_recover(cmp_pmf(CmpParams(0.8, 2.0), k_max=60), 50)
    assert params.sign_summary()["negative_count"] > 0
    assert abs(params.alpha_sum - 1) < 1e-6


def test_two_point_jumps_by_hand():
    params = DpcpParams(1.0, [0.5, 0.5])
    law = dpcp_reconstruct(params, 60)
    p0 = math.exp(-1)
    p1 = 0.5 * p0
    p2 = 0.5 * (0.5 * p1 + 2 * 0.5 * p0)
    assert np.allclose(law.probs[:3], [p0, p1, p2], rtol=1e-15)
    z = np.array([0.5, -0.5, 0.9j])
    assert np.max(np.abs(pgf_eval(law, z) - np.exp(params.log_pgf(z)))) < 1e-8
    draws = dcp_sample(params, 10 ** 6, seed=2)
    emp = np.bincount(draws, minlength=61)[:61] / draws.size
    assert 0.5 * np.abs(emp - law.probs).sum() < 0.005
