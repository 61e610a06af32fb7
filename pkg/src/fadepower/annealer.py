"""Simulated-annealing solvers for the two policy problems.

Both solvers share the same skeleton: a fast-annealing cooling schedule
T_b = T0/(c_sa*b + 1), a fixed number of candidate draws per temperature
step, feasibility filtering before any objective evaluation, and a
Metropolis chain over the feasible candidates.  A worse candidate is
accepted ("muting") with probability exp(-(candidate - current)/T), which
lets the chain escape local minima early on; the best candidate ever seen
is tracked separately and muting never overwrites it.

Candidate generation, which the underlying method leaves open:

* outage vectors are drawn uniformly per state on (DELTA, u_i) with
  u_N = min(eps_out, 1-DELTA) and u_i = 1-DELTA for i < N; the fixed-rate
  solver additionally sorts each draw into non-increasing order, since at
  constant rate the optimal powers are non-decreasing in the state index
  and sorting restricts sampling to that set without excluding the
  optimum;
* for the variable-rate problem, each surviving outage vector is paired
  with `rate_inner` rate vectors drawn uniformly on [r_min, r_max] per
  state.

The run evaluates a fixed budget of candidates (no adaptive stopping) and
terminates when the temperature falls below t_min.  Everything is a pure
function of (spec, schedule): identical inputs give identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .channel import EPSILON_GUARD as DELTA
from .channel import power_for_outage
from .markov import steady_state_for
from .policy import Policy, ProblemSpec, average_power, make_policy

# Candidate rows processed per vectorized batch (several temperature
# steps at a time); affects speed only, not results for a given seed.
_BLOCK_ROWS = 65536

# Fallback initial temperature when no probe candidate is feasible.
_T0_FALLBACK = 100.0


@dataclass(frozen=True)
class AnnealingSchedule:
    """Cooling schedule and draw budget of one solver run.

    t0:             initial temperature; None picks 10x the smallest
                    feasible average power found in a short probe
                    (falling back to 100 when the probe finds nothing)
    c_sa:           cooling constant of T_b = t0/(c_sa*b + 1)
    t_min:          stopping temperature
    outer_per_temp: candidate outage vectors drawn per temperature step
    rate_inner:     rate vectors drawn per surviving outage vector
                    (variable-rate solver only)
    seed:           RNG seed; equal seeds reproduce the run bit-exactly
    """

    t0: float | None = None
    c_sa: float = 1.0
    t_min: float = 0.01
    outer_per_temp: int = 200
    rate_inner: int = 20
    seed: int = 0

    def __post_init__(self) -> None:
        if self.t0 is not None and not self.t0 > 0.0:
            raise ValueError("t0 must be positive")
        if not self.c_sa > 0.0:
            raise ValueError("c_sa must be positive")
        if not self.t_min > 0.0:
            raise ValueError("t_min must be positive")
        if self.t0 is not None and not self.t_min < self.t0:
            raise ValueError("t_min must be below t0")
        if self.outer_per_temp < 1:
            raise ValueError("outer_per_temp must be >= 1")
        if self.rate_inner < 1:
            raise ValueError("rate_inner must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class SolveResult:
    """Outcome of one annealing run.

    evaluated_count counts every candidate draw (outage vectors plus, for
    the variable-rate solver, rate vectors); feasible_count the fully
    feasible candidates among them; accepted_count the Metropolis
    acceptances.  trace holds (temperature, current, best) samples taken
    once per processed batch; best is non-increasing along it.
    """

    best_avg_power: float
    best_policy: Policy
    accepted_count: int
    feasible_count: int
    evaluated_count: int
    trace: tuple[tuple[float, float, float], ...]


class NoFeasibleSolution(ValueError):
    """Raised when an entire run produces no feasible candidate."""

    def __init__(self, evaluated_count: int):
        super().__init__(
            f"no feasible solution found after {evaluated_count} candidate evaluations"
        )
        self.evaluated_count = evaluated_count


def temperature(schedule: AnnealingSchedule, b: int) -> float:
    """Fast-annealing temperature at integer step b >= 0."""
    if b < 0:
        raise ValueError("step index must be >= 0")
    if schedule.t0 is None:
        raise ValueError("t0 is unresolved; pass an explicit t0 or use solve_*")
    return schedule.t0 / (schedule.c_sa * b + 1.0)


def metropolis_accept(
    candidate_power: float, current_power: float, temperature: float, rng
) -> bool:
    """One Metropolis decision: accept iff s < exp(-(cand - cur)/T)."""
    if not temperature > 0.0:
        raise ValueError("temperature must be positive")
    s = float(rng.random())
    delta = candidate_power - current_power
    if delta <= 0.0:
        return True
    return s < math.exp(-delta / temperature)


class _Chain:
    """Metropolis chain state plus the best-ever record."""

    __slots__ = ("cur", "best", "best_eps", "best_rates", "accepted")

    def __init__(self) -> None:
        self.cur = math.inf
        self.best = math.inf
        self.best_eps = None
        self.best_rates = None
        self.accepted = 0

    def consume(self, pbars, thresholds, eps_rows, rate_rows=None) -> None:
        """Walk one batch of feasible candidates in draw order.

        thresholds[k] = -T_k*ln(s_k), so `pbar - cur < threshold` is the
        Metropolis test with the uniform draw s_k already folded in.
        """
        cur = self.cur
        best = self.best
        accepted = 0
        j_best = -1
        for j, (p, th) in enumerate(zip(pbars.tolist(), thresholds.tolist())):
            if p - cur < th:
                cur = p
                accepted += 1
                if p <= best:
                    best = p
                    j_best = j
        if j_best >= 0:
            self.best_eps = np.array(eps_rows[j_best], dtype=float)
            if rate_rows is not None:
                self.best_rates = np.array(rate_rows[j_best], dtype=float)
        self.cur = cur
        self.best = best
        self.accepted += accepted


def _draw_eps(rng, rows: int, n1: int, u_last: float, sort_desc: bool):
    highs = np.full(n1, 1.0 - DELTA)
    highs[-1] = u_last
    e = rng.uniform(DELTA, highs, size=(rows, n1))
    if sort_desc:
        e = np.sort(e, axis=1)[:, ::-1]
    return e


def _steady_rows(e):
    """Stationary distributions of many outage vectors at once.

    Uses the product form of the success-runs chain: pi_j is proportional
    to eps_0*...*eps_{j-1}, with the terminal weight divided by
    (1 - eps_N) to absorb the self-loop.
    """
    rows, n1 = e.shape
    w = np.ones((rows, n1))
    w[:, 1:] = np.cumprod(e[:, :-1], axis=1)
    w[:, -1] /= 1.0 - e[:, -1]
    return w / w.sum(axis=1, keepdims=True)


def _thresholds(rng, temps):
    s = rng.random(temps.size)
    with np.errstate(divide="ignore"):
        return -temps * np.log(s)


def _fixed_batch(spec: ProblemSpec, e, k_power: float, p_out: float):
    """Feasible indices and average powers of one fixed-rate batch."""
    p = k_power / (-np.log1p(-e))
    pi = _steady_rows(e)
    gamma_r = np.einsum("ij,ij->i", e, pi)
    gate = (
        (p.max(axis=1) <= spec.peak_power)
        & (p[:, -1] >= p_out)
        & (gamma_r <= spec.gamma)
    )
    idx = np.nonzero(gate)[0]
    pbar = np.einsum("ij,ij->i", p[idx], pi[idx])
    return idx, pbar


def solve_fixed(spec: ProblemSpec, schedule: AnnealingSchedule) -> SolveResult:
    """Anneal the fixed-rate problem: constant rate, free outage vector.

    Candidates pass the terminal-power window P_out <= P_N <= P_m (with
    P_out the power whose outage at rate R equals eps_out) and the
    average-loss gate before entering the Metropolis chain.  Raises
    immediately when the window itself is empty.
    """
    ch = spec.channel
    p_out = power_for_outage(spec.eps_out, spec.avg_rate, ch)
    if p_out > spec.peak_power * (1.0 + 1e-12):
        raise ValueError("feasibility window empty")
    u_last = min(spec.eps_out, 1.0 - DELTA)
    if u_last <= DELTA:
        raise NoFeasibleSolution(0)

    n1 = spec.n_states + 1
    k_power = (2.0**spec.avg_rate - 1.0) * ch.noise_power / ch.mean_fading_power
    rng = np.random.default_rng(schedule.seed)

    def batch(e):
        return _fixed_batch(spec, e, k_power, p_out)

    sched = _resolve_t0(spec, schedule, rng, batch, n1, sort_desc=True, u_last=u_last)
    chain = _Chain()
    trace: list[tuple[float, float, float]] = []
    evaluated = 0
    feasible = 0

    for temps in _temperature_blocks(sched):
        rows = temps.size * sched.outer_per_temp
        temps_all = np.repeat(temps, sched.outer_per_temp)
        e = _draw_eps(rng, rows, n1, u_last, sort_desc=True)
        idx, pbar = batch(e)
        evaluated += rows
        feasible += idx.size
        thr = _thresholds(rng, temps_all[idx])
        chain.consume(pbar, thr, e[idx])
        trace.append((float(temps[-1]), chain.cur, chain.best))

    if chain.best_eps is None:
        raise NoFeasibleSolution(evaluated)
    eps_t = tuple(float(x) for x in chain.best_eps)
    policy = make_policy(eps_t, (spec.avg_rate,) * n1, ch)
    best_avg = average_power(policy.powers, steady_state_for(eps_t))
    return SolveResult(
        best_avg_power=best_avg,
        best_policy=policy,
        accepted_count=chain.accepted,
        feasible_count=feasible,
        evaluated_count=evaluated,
        trace=tuple(trace),
    )


def solve_variable(spec: ProblemSpec, schedule: AnnealingSchedule) -> SolveResult:
    """Anneal the joint rate/outage problem.

    Two-step candidate generation: outage vectors are filtered on the
    average-loss and burst gates (the stationary distribution depends on
    the outage vector alone), then each survivor is paired with
    rate_inner uniform rate vectors filtered on the average-rate gate and
    the per-state power cap.
    """
    ch = spec.channel
    u_last = min(spec.eps_out, 1.0 - DELTA)
    if u_last <= DELTA:
        raise NoFeasibleSolution(0)

    n1 = spec.n_states + 1
    rng = np.random.default_rng(schedule.seed)

    def expand(e, temps_rows):
        """Rate draws for surviving outage rows of one batch."""
        pi = _steady_rows(e)
        gamma_r = np.einsum("ij,ij->i", e, pi)
        surv = np.nonzero((gamma_r <= spec.gamma) & (e[:, -1] <= spec.eps_out))[0]
        n_rates = surv.size * schedule.rate_inner
        if n_rates == 0:
            return 0, None
        rates = rng.uniform(spec.r_min, spec.r_max, size=(n_rates, n1))
        coef = ch.noise_power / (-np.log1p(-e[surv]) * ch.mean_fading_power)
        coef = np.repeat(coef, schedule.rate_inner, axis=0)
        pi_rep = np.repeat(pi[surv], schedule.rate_inner, axis=0)
        powers = (np.exp2(rates) - 1.0) * coef
        gate = (powers.max(axis=1) <= spec.peak_power) & (
            np.einsum("ij,ij->i", rates, pi_rep) >= spec.avg_rate
        )
        idx = np.nonzero(gate)[0]
        pbar = np.einsum("ij,ij->i", powers[idx], pi_rep[idx])
        eps_rows = np.repeat(e[surv], schedule.rate_inner, axis=0)[idx]
        temps_pairs = None
        if temps_rows is not None:
            temps_pairs = np.repeat(temps_rows[surv], schedule.rate_inner)[idx]
        return n_rates, (eps_rows, rates[idx], pbar, temps_pairs)

    def batch(e):
        n_rates, out = expand(e, None)
        if out is None:
            return np.empty(0, dtype=int), np.empty(0)
        _, _, pbar, _ = out
        return np.arange(pbar.size), pbar

    sched = _resolve_t0(spec, schedule, rng, batch, n1, sort_desc=False, u_last=u_last)
    chain = _Chain()
    trace: list[tuple[float, float, float]] = []
    evaluated = 0
    feasible = 0

    for temps in _temperature_blocks(sched):
        rows = temps.size * sched.outer_per_temp
        temps_all = np.repeat(temps, sched.outer_per_temp)
        e = _draw_eps(rng, rows, n1, u_last, sort_desc=False)
        n_rates, out = expand(e, temps_all)
        evaluated += rows + n_rates
        if out is None:
            trace.append((float(temps[-1]), chain.cur, chain.best))
            continue
        eps_rows, rate_rows, pbar, temps_pairs = out
        feasible += pbar.size
        thr = _thresholds(rng, temps_pairs)
        chain.consume(pbar, thr, eps_rows, rate_rows)
        trace.append((float(temps[-1]), chain.cur, chain.best))

    if chain.best_eps is None:
        raise NoFeasibleSolution(evaluated)
    eps_t = tuple(float(x) for x in chain.best_eps)
    rates_t = tuple(float(x) for x in chain.best_rates)
    policy = make_policy(eps_t, rates_t, ch)
    best_avg = average_power(policy.powers, steady_state_for(eps_t))
    return SolveResult(
        best_avg_power=best_avg,
        best_policy=policy,
        accepted_count=chain.accepted,
        feasible_count=feasible,
        evaluated_count=evaluated,
        trace=tuple(trace),
    )


def _temperature_blocks(schedule: AnnealingSchedule):
    """Yield the cooling sequence in batches of temperature steps."""
    t0 = schedule.t0
    n_steps = int(math.floor((t0 / schedule.t_min - 1.0) / schedule.c_sa)) + 1
    block = max(1, _BLOCK_ROWS // schedule.outer_per_temp)
    for start in range(0, n_steps, block):
        stop = min(start + block, n_steps)
        b = np.arange(start, stop, dtype=float)
        yield t0 / (schedule.c_sa * b + 1.0)


def _resolve_t0(
    spec: ProblemSpec,
    schedule: AnnealingSchedule,
    rng,
    batch,
    n1: int,
    sort_desc: bool,
    u_last: float,
) -> AnnealingSchedule:
    """Fill in an automatic t0 from a short probe of the search space."""
    if schedule.t0 is not None:
        return schedule
    rows = 10 * schedule.outer_per_temp
    e = _draw_eps(rng, rows, n1, u_last, sort_desc)
    idx, pbar = batch(e)
    t0 = 10.0 * float(pbar.min()) if idx.size else _T0_FALLBACK
    t0 = min(max(t0, 10.0 * schedule.t_min), 1000.0)
    return replace(schedule, t0=t0)
