"""Discrete (pseudo) compound Poisson representation: pgf, Panjer recursion, sampling.

A law on the non-negative integers with ``P(0) > 0`` and a zero-free pgf on
the closed unit disk has ``G(z) = exp(sum_k rate * w_k * (z**k - 1))`` with
real weights ``w_k`` summing to one. The weights follow from the pmf through
the Panjer recursion ``(n+1) P(n+1) = rate * sum_{j=1}^{n+1} j w_j P(n+1-j)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ParameterError, PseudoParametersError, ZeroMassError
from .kernels import rng
from .pmf import TruncatedPmf

# weights within this distance of zero are rounding noise, not genuine signs
SIGN_THRESHOLD = 1e-12


def pgf_eval(pmf: TruncatedPmf, z):
    """``G(z) = sum_n P(n) z**n`` over the window, for ``|z| <= 1``.

    Accepts a scalar or an array of complex points. The neglected part has
    modulus at most ``tail_bound``.
    """
    z_arr = np.asarray(z, dtype=complex)
    if np.any(np.abs(z_arr) > 1 + 1e-12):
        raise ParameterError("pgf is evaluated on the closed unit disk only")
    # Horner from the highest coefficient
    acc = np.zeros_like(z_arr)
    for c in pmf.probs[::-1]:
        acc = acc * z_arr + c
    if pmf.support_start:
        acc = acc * z_arr ** pmf.support_start
    return complex(acc) if acc.ndim == 0 else acc


class MinModulus(NamedTuple):
    min_mod: float
    argmin_z: complex


def pgf_min_modulus(pmf: TruncatedPmf, radial_steps: int = 256,
                    angular_steps: int = 256) -> MinModulus:
    """Smallest ``|G(z)|`` over a polar grid of the closed unit disk.

    A screening statistic for zeros of the pgf, not a proof of their absence.
    Radii run over ``linspace(0, 1, radial_steps)``; angles are
    ``2 pi j / angular_steps``.
    """
    if radial_steps < 64 or angular_steps < 64:
        raise ParameterError("use at least 64 radial and 64 angular steps")
    radii = np.linspace(0.0, 1.0, int(radial_steps))
    angles = 2 * np.pi * np.arange(int(angular_steps)) / angular_steps
    grid = radii[:, None] * np.exp(1j * angles)[None, :]
    # float round-off can push |z| a hair past 1 on the rim
    mod = np.abs(pgf_eval(pmf, grid / np.maximum(np.abs(grid), 1.0)))
    i = np.unravel_index(int(np.argmin(mod)), mod.shape)
    return MinModulus(float(mod[i]), complex(grid[i]))


@dataclass(frozen=True)
class DpcpParams:
    """Rate and signed jump weights of a discrete pseudo compound Poisson law.

    ``alphas[k-1]`` is the weight of a jump of size ``k``.
    """

    lambda_tilde: float
    alphas: np.ndarray
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        alphas = np.array(self.alphas, dtype=float)
        if alphas.ndim != 1 or not np.all(np.isfinite(alphas)):
            raise ParameterError("alphas must be a finite 1-D vector")
        if not (math.isfinite(self.lambda_tilde) and self.lambda_tilde > 0):
            raise ParameterError(f"lambda_tilde > 0 required (got {self.lambda_tilde})")
        alphas.setflags(write=False)
        object.__setattr__(self, "alphas", alphas)

    @property
    def alpha_sum(self) -> float:
        return math.fsum(self.alphas)

    def sign_summary(self, threshold: float = SIGN_THRESHOLD) -> dict:
        neg = np.flatnonzero(self.alphas < -threshold)
        return {
            "negative_count": int(neg.size),
            "first_negative_index": int(neg[0]) + 1 if neg.size else None,
        }

    def log_pgf(self, z):
        """``sum_k rate * alpha_k * (z**k - 1)`` for the stored weights."""
        z = np.asarray(z, dtype=complex)
        k = np.arange(1, self.alphas.size + 1)
        terms = self.alphas * (z[..., None] ** k - 1.0)
        return self.lambda_tilde * terms.sum(axis=-1)

    def to_dict(self) -> dict:
        return {
            "lambda_tilde": self.lambda_tilde,
            "alphas": [float(a) for a in self.alphas],
            "alpha_sum": self.alpha_sum,
            "sign_summary": self.sign_summary(),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "DpcpParams":
        try:
            return cls(float(data["lambda_tilde"]), np.asarray(data["alphas"], dtype=float))
        except (KeyError, TypeError) as exc:
            raise ParameterError(f"malformed DPCP document: {exc}") from exc


def dpcp_recover(pmf: TruncatedPmf, n_terms: int) -> DpcpParams:
    """Rate ``-log P(0)`` and the first ``n_terms`` jump weights by Panjer recursion.

    Weights are never rejected for their sign: negative values are the
    "pseudo" case and are reported through ``sign_summary``.

    Examples
    --------
    >>> from compoisson.kernels import poisson_pmf
    >>> params = dpcp_recover(poisson_pmf(2.0, tol=1e-15), 4)
    >>> round(params.lambda_tilde, 12), [round(float(a), 12) for a in params.alphas]
    (2.0, [1.0, 0.0, 0.0, 0.0])
    """
    if int(n_terms) != n_terms or n_terms < 1:
        raise ParameterError(f"n_terms >= 1 required (got {n_terms})")
    n_terms = int(n_terms)
    probs = pmf.padded(0, n_terms + 1)
    p0 = probs[0]
    if p0 <= 0:
        raise ZeroMassError("P(0) must be positive for a compound Poisson representation")
    if p0 >= 1:
        raise ParameterError("a point mass at 0 has no compound Poisson rate")
    rate = -math.log(p0)
    alphas = np.zeros(n_terms)
    j = np.arange(1, n_terms + 1)
    for m in range(1, n_terms + 1):
        # sum_{j=1}^{m-1} j alpha_j P(m-j)
        inner = math.fsum(j[: m - 1] * alphas[: m - 1] * probs[1:m][::-1])
        alphas[m - 1] = (m * probs[m] / rate - inner) / (m * p0)
    return DpcpParams(rate, alphas, source={"family": pmf.meta.get("family"),
                                            "params": pmf.to_dict()["params"]})


def dpcp_reconstruct(params: DpcpParams, n_max: int) -> TruncatedPmf:
    """Forward Panjer recursion from ``P(0) = exp(-rate)`` up to ``n_max``.

    ``tail_bound`` is ``|1 - sum P|``; it is large when ``n_max`` is too small
    or the weight vector is truncated early.

    Raises
    ------
    PseudoParametersError
        If the recursion produces a clearly negative mass (the weights do not
        describe a probability law up to ``n_max``).
    """
    if int(n_max) != n_max or n_max < 0:
        raise ParameterError(f"n_max >= 0 required (got {n_max})")
    n_max = int(n_max)
    rate = params.lambda_tilde
    n_alpha = params.alphas.size
    weighted = np.arange(1, n_alpha + 1) * params.alphas  # j * alpha_j
    probs = np.zeros(n_max + 1)
    probs[0] = math.exp(-rate)
    for m in range(1, n_max + 1):
        top = min(m, n_alpha)
        # sum_{j=1}^{top} j alpha_j P(m-j)
        probs[m] = rate / m * math.fsum(weighted[:top] * probs[m - top:m][::-1])
    scale = float(np.max(np.abs(probs)))
    if np.any(probs < -1e-14 * scale):
        k = int(np.argmax(probs < -1e-14 * scale))
        raise PseudoParametersError(f"reconstruction gives negative mass {probs[k]:.3g} at n={k}")
    probs = np.clip(probs, 0.0, None)
    return TruncatedPmf(
        0,
        probs,
        min(abs(1.0 - math.fsum(probs)), 1.0),
        meta={"family": "dpcp", "params": {"lambda_tilde": rate, "alphas": [float(a) for a in params.alphas]}},
    )


def dcp_sample(params: DpcpParams, n: int, seed: int) -> np.ndarray:
    """``n`` draws of ``Y_1 + ... + Y_N`` with ``N ~ Poisson(rate)``, ``P(Y = k) = alpha_k``.

    Raises
    ------
    PseudoParametersError
        If any weight is negative; the decomposition then has no
        probabilistic meaning.
    """
    alphas = params.alphas
    if np.any(alphas < -SIGN_THRESHOLD):
        raise PseudoParametersError(
            f"weights are pseudo (first negative at k={params.sign_summary()['first_negative_index']}); "
            "sampling needs a genuine compound Poisson law"
        )
    if abs(params.alpha_sum - 1.0) > 1e-9:
        raise ParameterError(f"weights must sum to 1 within 1e-9 (sum = {params.alpha_sum!r})")
    if int(n) != n or n < 0:
        raise ParameterError(f"n >= 0 integer required (got {n})")
    n = int(n)
    gen = rng(seed)
    counts = gen.poisson(params.lambda_tilde, size=n)
    weights = np.clip(alphas, 0.0, None)
    jumps = gen.choice(np.arange(1, alphas.size + 1), size=int(counts.sum()), p=weights / weights.sum())
    owner = np.repeat(np.arange(n), counts)
    return np.bincount(owner, weights=jumps, minlength=n).astype(np.int64)


__all__ = [
    "DpcpParams",
    "MinModulus",
    "SIGN_THRESHOLD",
    "dcp_sample",
    "dpcp_reconstruct",
    "dpcp_recover",
    "pgf_eval",
    "pgf_min_modulus",
]
