"""Birth-death queue with state-dependent service ``mu * n**nu``: exact equilibrium and simulation."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .characterizations import TvInterval, tv_distance
from .errors import ParameterError
from .kernels import MAX_TERMS, _anchored, _check_tol, _geometric_window, rng
from .pmf import DEFAULT_TOL, TruncatedPmf

# fraction of transitions blocked at the state cap above which a warning is raised
CAP_WARN_FRACTION = 1e-3


class CapSaturationWarning(RuntimeWarning):
    """The simulated queue hit its state cap too often for the estimate to be trusted."""


def _check_rates(arrival: float, service: float, nu: float):
    for name, v in (("arrival", arrival), ("service", service), ("nu", nu)):
        if not (math.isfinite(v) and v > 0):
            raise ParameterError(f"{name} must be a positive real (got {v})")


def queue_exact_steady_state(arrival: float, service: float, nu: float,
                             tol: float = DEFAULT_TOL) -> TruncatedPmf:
    """Equilibrium of the chain with up-rate ``arrival`` and down-rate ``service * n**nu``.

    Solves the cut equations ``arrival * P(n) = service * (n+1)**nu * P(n+1)``
    (the balance equations of a birth-death chain) and normalizes. States
    are kept until the remainder is certified below ``tol`` by the geometric
    envelope of the decreasing ratios past the mode.
    """
    _check_rates(arrival, service, nu)
    _check_tol(tol)
    log_rho = math.log(arrival) - math.log(service)
    mode = math.exp(log_rho / nu)
    if mode > MAX_TERMS / 4:
        raise ParameterError(f"equilibrium mode {mode:.3g} is too large to tabulate")
    anchor = int(mode)

    def weights(k):
        return _anchored(log_rho - nu * np.log(k[1:]), min(anchor, k.size - 1)), 0.0

    # past the mode the up/down ratio arrival / (service (n+1)**nu) decreases
    win = _geometric_window(
        weights,
        lambda k: np.exp(log_rho - nu * np.log(k + 1.0)),
        start=0,
        tol=tol,
        first_ok=mode,
        initial=mode + 12 * math.sqrt(mode / nu + 1) + 32,
    )
    return TruncatedPmf(
        0,
        win.probs,
        win.tail_rel,
        tol,
        meta={"family": "queue-equilibrium",
              "params": {"arrival": arrival, "service": service, "nu": nu}},
        tail_ratio=win.end_ratio,
    )


@dataclass(frozen=True)
class QueueConfig:
    """Simulation inputs; ``burn_in`` and ``state_cap`` default from the other fields.

    ``burn_in`` defaults to ``horizon / 100``. ``state_cap`` defaults to four
    times the smallest state whose exact equilibrium tail is below 1e-12
    (and never less than 10).
    """

    arrival: float
    service: float
    nu: float
    horizon: float
    burn_in: Optional[float] = None
    seed: int = 0
    state_cap: Optional[int] = None

    def __post_init__(self):
        _check_rates(self.arrival, self.service, self.nu)
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", self.horizon / 100.0)
        if self.state_cap is None:
            exact = queue_exact_steady_state(self.arrival, self.service, self.nu, 1e-12)
            object.__setattr__(self, "state_cap", max(4 * exact.last, 10))
        if not (math.isfinite(self.horizon) and self.horizon > self.burn_in >= 0):
            raise ParameterError(f"need horizon > burn_in >= 0 (got {self.horizon}, {self.burn_in})")
        if int(self.state_cap) != self.state_cap or self.state_cap < 10:
            raise ParameterError(f"state_cap must be an integer >= 10 (got {self.state_cap})")


@dataclass(frozen=True)
class SteadyStateEstimate:
    occupancy: TruncatedPmf
    transitions: int
    tv_to_cmp: TvInterval
    cap_hits: int
    seed: int
    balance_residuals: np.ndarray  # |up flux - down flux| / up flux, per state n -> n+1

    def to_dict(self) -> dict:
        return {
            "occupancy": self.occupancy.to_dict(),
            "tv_to_cmp": [self.tv_to_cmp.lower, self.tv_to_cmp.upper],
            "transitions": self.transitions,
            "cap_hits": self.cap_hits,
            "seed": self.seed,
            "max_balance_residual": float(np.max(self.balance_residuals, initial=0.0)),
        }


def queue_simulate(config: QueueConfig, chunk: int = 1 << 16) -> SteadyStateEstimate:
    """Exact event-driven simulation of the queue, started empty.

    Holding times are exponential with the total rate ``arrival +
    service * n**nu``; the next event is an arrival with probability
    ``arrival / total``. Time spent in each state after ``burn_in`` gives the
    occupancy law. Arrivals at ``state_cap`` are blocked and counted in
    ``cap_hits``.
    """
    cap = int(config.state_cap)
    lam0 = config.arrival
    down = config.service * np.arange(cap + 1, dtype=float) ** config.nu
    total_rate = (lam0 + down).tolist()
    p_up = (lam0 / (lam0 + down)).tolist()
    gen = rng(config.seed)

    occupancy = np.zeros(cap + 1)
    t, state = 0.0, 0
    transitions = cap_hits = 0
    burn, horizon = config.burn_in, config.horizon
    while t < horizon:
        holds = gen.standard_exponential(chunk).tolist()
        coins = gen.random(chunk).tolist()
        for e, u in zip(holds, coins):
            dt = e / total_rate[state]
            t_next = t + dt
            if t_next > burn:
                occupancy[state] += min(t_next, horizon) - max(t, burn)
            t = t_next
            if t >= horizon:
                break
            if u < p_up[state]:
                if state == cap:
                    cap_hits += 1
                    continue
                state += 1
            else:
                state -= 1
            transitions += 1

    if cap_hits > CAP_WARN_FRACTION * max(transitions, 1):
        warnings.warn(
            f"state cap {cap} blocked {cap_hits} arrivals ({cap_hits / max(transitions, 1):.2%} "
            "of transitions); raise state_cap",
            CapSaturationWarning,
            stacklevel=2,
        )
    last = int(np.flatnonzero(occupancy)[-1])
    pi = occupancy[: last + 1] / math.fsum(occupancy)
    occ = TruncatedPmf(
        0,
        pi,
        0.0,
        meta={"family": "queue-occupancy", "seed": config.seed,
              "params": {"arrival": lam0, "service": config.service, "nu": config.nu,
                         "horizon": horizon, "burn_in": burn, "state_cap": cap}},
    )
    exact = queue_exact_steady_state(lam0, config.service, config.nu)
    up_flux = lam0 * pi[:-1]
    down_flux = down[1: last + 1] * pi[1:]
    # a state unvisited after burn-in has no flux to balance
    seen = up_flux > 0
    residuals = np.zeros_like(up_flux)
    residuals[seen] = np.abs(up_flux - down_flux)[seen] / up_flux[seen]
    return SteadyStateEstimate(occ, transitions, tv_distance(occ, exact), cap_hits, config.seed, residuals)


__all__ = [
    "CapSaturationWarning",
    "QueueConfig",
    "SteadyStateEstimate",
    "queue_exact_steady_state",
    "queue_simulate",
]
