"""Slot-level Monte-Carlo simulation of a policy.

Each slot transmits one packet: the current loss state i selects
(P_i, R_i), an i.i.d. channel gain is drawn, and the packet is lost
exactly when the rate exceeds the instantaneous capacity.  Success
returns the chain to state 0; a loss advances it (capping at the burst
bound N).  The simulator measures everything the analytic model
predicts -- loss rate, state occupancy, burst-outage frequency, average
power, transmitted and delivered rate -- plus run-length statistics the
chain model does not expose.

A warm-up prefix of `burn_in` slots (simulated in addition to `slots`)
is excluded from all statistics so that the deterministic start in
state 0 does not bias the occupancy estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelModel
from .markov import achieved_loss_rate, steady_state_for
from .policy import Policy, ProblemSpec, average_power


@dataclass(frozen=True)
class SimConfig:
    policy: Policy
    channel: ChannelModel
    slots: int
    seed: int
    burst_bound: int
    burn_in: int = 1000

    def __post_init__(self) -> None:
        if self.slots < 1:
            raise ValueError("slots must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.burst_bound != self.policy.n_states:
            raise ValueError("burst_bound must equal the policy's state count minus 1")


@dataclass(frozen=True)
class SimReport:
    """Sample statistics over the counted window of one simulation.

    run_length_histogram maps the length of each maximal loss run closed
    during the counted window (a run still open at the end is counted at
    its length so far) to the number of such runs.  violations counts
    the slots on which a loss extended a run already at the burst bound.
    state_slots and state_losses hold the per-state slot and loss counts
    behind the ratio statistics.
    """

    empirical_gamma: float
    empirical_eps_out: float | None
    occupancy: tuple[float, ...]
    run_length_histogram: dict[int, int]
    avg_power: float
    transmitted_rate: float
    delivered_rate: float
    violations: int
    state_slots: tuple[int, ...]
    state_losses: tuple[int, ...]


def simulate(cfg: SimConfig) -> SimReport:
    """Run one seeded replication and tally the counted window."""
    policy = cfg.policy
    n = cfg.burst_bound
    ch = cfg.channel
    thresholds = []
    for p, r in zip(policy.powers, policy.rates):
        if r == 0.0:
            thresholds.append(0.0)
        elif p == 0.0:
            thresholds.append(math.inf)
        else:
            thresholds.append((2.0**r - 1.0) * ch.noise_power / (p * ch.mean_fading_power))

    rng = np.random.default_rng(cfg.seed)
    total = cfg.burn_in + cfg.slots
    gains = rng.exponential(ch.mean_fading_power, size=total).tolist()

    state = 0
    run_len = 0
    for t in range(cfg.burn_in):
        if gains[t] < thresholds[state]:
            run_len += 1
            state = state + 1 if state < n else n
        else:
            run_len = 0
            state = 0

    slots_in = [0] * (n + 1)
    losses_in = [0] * (n + 1)
    hist: dict[int, int] = {}
    violations = 0
    for t in range(cfg.burn_in, total):
        slots_in[state] += 1
        if gains[t] < thresholds[state]:
            losses_in[state] += 1
            if state == n:
                violations += 1
            run_len += 1
            state = state + 1 if state < n else n
        else:
            if run_len > 0:
                hist[run_len] = hist.get(run_len, 0) + 1
            run_len = 0
            state = 0
    if run_len > 0:
        hist[run_len] = hist.get(run_len, 0) + 1

    slots = cfg.slots
    total_losses = sum(losses_in)
    occupancy = tuple(c / slots for c in slots_in)
    avg_power = sum(p * c for p, c in zip(policy.powers, slots_in)) / slots
    transmitted = sum(r * c for r, c in zip(policy.rates, slots_in)) / slots
    delivered = (
        sum(r * (c - l) for r, c, l in zip(policy.rates, slots_in, losses_in)) / slots
    )
    eps_out = losses_in[n] / slots_in[n] if slots_in[n] > 0 else None

    return SimReport(
        empirical_gamma=total_losses / slots,
        empirical_eps_out=eps_out,
        occupancy=occupancy,
        run_length_histogram=hist,
        avg_power=avg_power,
        transmitted_rate=transmitted,
        delivered_rate=delivered,
        violations=violations,
        state_slots=tuple(slots_in),
        state_losses=tuple(losses_in),
    )


@dataclass(frozen=True)
class ValidationRecord:
    """Side-by-side analytic vs empirical statistics with z-scores.

    Each z-score is (empirical - analytic) / standard error, with the
    standard error taken from the analytic value as if the samples were
    independent; entries are None where the sample provides no data
    (e.g. a state never visited).  max_abs_z is the largest magnitude
    among the defined scores.
    """

    report: SimReport
    analytic_gamma: float
    analytic_pi: tuple[float, ...]
    analytic_avg_power: float
    analytic_eps_out: float
    z_gamma: float
    z_occupancy: tuple[float, ...]
    z_avg_power: float
    z_eps_out: float | None
    z_state_outage: tuple[float | None, ...]
    max_abs_z: float = field(init=False)

    def __post_init__(self) -> None:
        zs = [self.z_gamma, self.z_avg_power, *self.z_occupancy]
        zs.extend(z for z in (self.z_eps_out, *self.z_state_outage) if z is not None)
        object.__setattr__(self, "max_abs_z", max(abs(z) for z in zs))


def _z(diff: float, se: float) -> float:
    if diff == 0.0:
        return 0.0
    if se == 0.0:
        return math.copysign(math.inf, diff)
    return diff / se


def validate(
    policy: Policy,
    spec: ProblemSpec,
    slots: int,
    seed: int,
    *,
    burn_in: int = 1000,
) -> ValidationRecord:
    """Simulate `policy` and score the sample against the chain model."""
    report = simulate(
        SimConfig(
            policy=policy,
            channel=spec.channel,
            slots=slots,
            seed=seed,
            burst_bound=spec.n_states,
            burn_in=burn_in,
        )
    )
    pi = steady_state_for(policy.eps)
    gamma_r = achieved_loss_rate(policy.eps, pi)
    p_bar = average_power(policy.powers, pi)
    eps_n = policy.eps[-1]

    z_gamma = _z(
        report.empirical_gamma - gamma_r,
        math.sqrt(gamma_r * (1.0 - gamma_r) / slots),
    )
    z_occ = tuple(
        _z(occ - p, math.sqrt(p * (1.0 - p) / slots))
        for occ, p in zip(report.occupancy, pi)
    )
    power_var = float(np.dot(np.square(policy.powers), pi)) - p_bar**2
    z_power = _z(
        report.avg_power - p_bar, math.sqrt(max(power_var, 0.0) / slots)
    )
    n_terminal = report.state_slots[-1]
    z_eps_out = None
    if n_terminal > 0 and report.empirical_eps_out is not None:
        z_eps_out = _z(
            report.empirical_eps_out - eps_n,
            math.sqrt(eps_n * (1.0 - eps_n) / n_terminal),
        )
    z_states = []
    for e, c, l in zip(policy.eps, report.state_slots, report.state_losses):
        if c == 0:
            z_states.append(None)
            continue
        z_states.append(_z(l / c - e, math.sqrt(e * (1.0 - e) / c)))

    return ValidationRecord(
        report=report,
        analytic_gamma=gamma_r,
        analytic_pi=tuple(float(p) for p in pi),
        analytic_avg_power=p_bar,
        analytic_eps_out=eps_n,
        z_gamma=z_gamma,
        z_occupancy=z_occ,
        z_avg_power=z_power,
        z_eps_out=z_eps_out,
        z_state_outage=tuple(z_states),
    )
