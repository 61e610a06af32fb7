"""Transmission policies and constraint evaluation.

A policy assigns to every loss state i an outage target eps[i], a rate
rates[i], and the transmit power powers[i] that realizes that outage at
that rate.  Evaluation reports the stationary average power together
with every constraint of the two optimization problems:

* variable rate -- C1 average transmitted rate >= R, C2 average loss
  <= gamma, C3 terminal outage <= eps_out, C4 per-state rate bounds,
  plus PEAK per-state power cap;
* fixed rate -- all rates pinned to R, with the same loss/burst/peak
  checks (labels keep the same meaning in both reports).

Constraint comparisons allow an absolute-relative slack of 1e-9 so that
policies constructed to sit exactly on a constraint boundary are not
rejected for round-off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelModel, power_for_outage
from .markov import achieved_loss_rate, steady_state_for

# Slack scale for inequality checks; see module docstring.
_SLACK = 1e-9


def _leq(x: float, bound: float) -> bool:
    return x <= bound + _SLACK * max(1.0, abs(bound))


def _geq(x: float, bound: float) -> bool:
    return x >= bound - _SLACK * max(1.0, abs(bound))


@dataclass(frozen=True)
class ProblemSpec:
    """All loss/rate/power targets of one link-policy problem.

    gamma       average packet-loss target in (0, 1)
    n_states    burst bound N >= 1 (maximum tolerated consecutive losses)
    eps_out     burst-outage target in (0, 1): admissible probability of
                losing yet another packet once N are already lost
    avg_rate    required average transmitted rate R (bits/s/Hz)
    r_min       minimum per-state rate (bits/s/Hz)
    r_max       maximum per-state rate (bits/s/Hz)
    peak_power  per-state transmit power cap P_m (watts)
    channel     fading/noise model the powers refer to
    """

    gamma: float
    n_states: int
    eps_out: float
    avg_rate: float
    r_min: float
    r_max: float
    peak_power: float
    channel: ChannelModel

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if int(self.n_states) != self.n_states or self.n_states < 1:
            raise ValueError("N must be >= 1")
        if not 0.0 < self.eps_out < 1.0:
            raise ValueError("eps_out must lie in (0, 1)")
        if not self.avg_rate > 0.0:
            raise ValueError("avg_rate must be positive")
        if self.r_min < 0.0 or self.r_min > self.r_max:
            raise ValueError("need 0 <= r_min <= r_max")
        if not self.peak_power > 0.0:
            raise ValueError("peak_power must be positive")


@dataclass(frozen=True)
class Policy:
    """Per-state outage targets, rates, and the powers realizing them."""

    eps: tuple[float, ...]
    rates: tuple[float, ...]
    powers: tuple[float, ...]

    def __post_init__(self) -> None:
        if not (len(self.eps) == len(self.rates) == len(self.powers)):
            raise ValueError("eps, rates, powers must have equal length")
        if len(self.eps) < 2:
            raise ValueError("N must be >= 1")

    @property
    def n_states(self) -> int:
        return len(self.eps) - 1


def make_policy(eps, rates, ch: ChannelModel) -> Policy:
    """Build a Policy, deriving each power from its (eps, rate) pair."""
    eps = tuple(float(e) for e in eps)
    rates = tuple(float(r) for r in rates)
    powers = tuple(power_for_outage(e, r, ch) for e, r in zip(eps, rates))
    return Policy(eps=eps, rates=rates, powers=powers)


@dataclass(frozen=True)
class EvalReport:
    """Objective value and constraint outcome of one policy.

    `violated` lists the failed constraint labels (C1 average rate,
    C2 average loss, C3 burst outage, C4 rate bounds, PEAK power cap);
    `feasible` is true exactly when it is empty.
    """

    avg_power: float
    avg_rate_achieved: float
    gamma_r: float
    eps_n: float
    feasible: bool
    violated: tuple[str, ...]


def average_power(powers, pi) -> float:
    """Stationary mean transmit power, the optimization objective."""
    p = np.asarray(powers, dtype=float)
    w = np.asarray(pi, dtype=float)
    if p.shape != w.shape:
        raise ValueError("powers and pi lengths must match")
    return float(np.dot(p, w))


def _check_dimensions(policy: Policy, spec: ProblemSpec) -> None:
    if policy.n_states != spec.n_states:
        raise ValueError(
            f"policy has N={policy.n_states} but spec has N={spec.n_states}"
        )


def evaluate_variable(policy: Policy, spec: ProblemSpec) -> EvalReport:
    """Evaluate a policy against the variable-rate problem constraints."""
    _check_dimensions(policy, spec)
    pi = steady_state_for(policy.eps)
    gamma_r = achieved_loss_rate(policy.eps, pi)
    rate_avg = float(np.dot(policy.rates, pi))
    p_avg = average_power(policy.powers, pi)
    eps_n = policy.eps[-1]

    violated = []
    if not _geq(rate_avg, spec.avg_rate):
        violated.append("C1")
    if not _leq(gamma_r, spec.gamma):
        violated.append("C2")
    if not _leq(eps_n, spec.eps_out):
        violated.append("C3")
    if not all(
        _geq(r, spec.r_min) and _leq(r, spec.r_max) for r in policy.rates
    ):
        violated.append("C4")
    if not all(_leq(p, spec.peak_power) for p in policy.powers):
        violated.append("PEAK")

    return EvalReport(
        avg_power=p_avg,
        avg_rate_achieved=rate_avg,
        gamma_r=gamma_r,
        eps_n=eps_n,
        feasible=not violated,
        violated=tuple(violated),
    )


def evaluate_fixed(policy: Policy, spec: ProblemSpec) -> EvalReport:
    """Evaluate a constant-rate policy against the fixed-rate problem.

    All rates must equal spec.avg_rate.  The terminal power window
    P_out <= P_N <= P_m is covered by the burst check (its lower edge,
    since power is decreasing in outage at fixed rate) and by the peak
    check over every state (its upper edge; with losses ordered worst
    state last, checking P_N alone would suffice, but the full scan is
    cheap and also covers unordered inputs).
    """
    _check_dimensions(policy, spec)
    r = spec.avg_rate
    if any(abs(ri - r) > 1e-12 * max(1.0, abs(r)) for ri in policy.rates):
        raise ValueError("fixed-rate policy malformed")

    pi = steady_state_for(policy.eps)
    gamma_r = achieved_loss_rate(policy.eps, pi)
    rate_avg = float(np.dot(policy.rates, pi))
    p_avg = average_power(policy.powers, pi)
    eps_n = policy.eps[-1]

    violated = []
    if not _leq(gamma_r, spec.gamma):
        violated.append("C2")
    if not _leq(eps_n, spec.eps_out):
        violated.append("C3")
    if not all(_leq(p, spec.peak_power) for p in policy.powers):
        violated.append("PEAK")

    return EvalReport(
        avg_power=p_avg,
        avg_rate_achieved=rate_avg,
        gamma_r=gamma_r,
        eps_n=eps_n,
        feasible=not violated,
        violated=tuple(violated),
    )


def check_power_ordering(powers) -> bool:
    """True iff powers are non-decreasing state to state (1e-9 slack)."""
    p = list(powers)
    return all(p[i] <= p[i + 1] + 1e-9 for i in range(len(p) - 1))
