"""Energy-minimal transmit policies for a Rayleigh link without CSIT.

The library models bursty packet loss with a success-runs Markov chain
over outage states, and minimizes average transmit power subject to an
average loss-rate constraint and a bound on the N-th consecutive-loss
probability.  Solvers: exact N=1 closed forms and grid searches, plus
simulated annealing for general N; a slot-level Monte-Carlo simulator
cross-checks any policy.
"""

from .annealer import (
    AnnealingSchedule,
    NoFeasibleSolution,
    SolveResult,
    metropolis_accept,
    solve_fixed,
    solve_variable,
    temperature,
)
from .channel import ChannelModel, max_rate, outage_probability, power_for_outage
from .closed_form import (
    n1_epsilon0,
    n1_fixed_search,
    n1_fixed_solution,
    n1_region,
    n1_steady,
    n1_variable_search,
    n1_variable_solution,
)
from .markov import (
    achieved_loss_rate,
    build_transition_matrix,
    steady_state,
    steady_state_for,
)
from .policy import (
    EvalReport,
    Policy,
    ProblemSpec,
    average_power,
    check_power_ordering,
    evaluate_fixed,
    evaluate_variable,
    make_policy,
)
from .simulator import SimConfig, SimReport, ValidationRecord, simulate, validate

__version__ = "0.1.0"

__all__ = [
    "AnnealingSchedule",
    "ChannelModel",
    "EvalReport",
    "NoFeasibleSolution",
    "Policy",
    "ProblemSpec",
    "SimConfig",
    "SimReport",
    "SolveResult",
    "ValidationRecord",
    "achieved_loss_rate",
    "average_power",
    "build_transition_matrix",
    "check_power_ordering",
    "evaluate_fixed",
    "evaluate_variable",
    "make_policy",
    "max_rate",
    "metropolis_accept",
    "n1_epsilon0",
    "n1_fixed_search",
    "n1_fixed_solution",
    "n1_region",
    "n1_steady",
    "n1_variable_search",
    "n1_variable_solution",
    "outage_probability",
    "power_for_outage",
    "simulate",
    "solve_fixed",
    "solve_variable",
    "steady_state",
    "steady_state_for",
    "temperature",
    "validate",
]
