import math

import numpy as np
import pytest

from fadepower.channel import ChannelModel, max_rate
from fadepower.markov import achieved_loss_rate, steady_state_for
from fadepower.policy import Policy, ProblemSpec, make_policy
from fadepower.simulator import SimConfig, simulate, validate

CH = ChannelModel()


def sim(policy, slots, seed=0, burn_in=1000, channel=CH):
    return simulate(
        SimConfig(
            policy=policy,
            channel=channel,
            slots=slots,
            seed=seed,
            burst_bound=policy.n_states,
            burn_in=burn_in,
        )
    )


def ref_policy():
    return make_policy([0.225, 0.1], [1.0, 1.0], CH)


def test_zero_rate_policy_never_loses():
    pol = Policy(eps=(0.0, 0.0), rates=(0.0, 0.0), powers=(0.0, 0.0))
    rep = sim(pol, 5000)
    assert rep.empirical_gamma == 0.0
    assert rep.occupancy == (1.0, 0.0)
    assert rep.violations == 0
    assert rep.empirical_eps_out is None
    assert rep.run_length_histogram == {}


def test_sample_statistics_match_chain():
    pol = ref_policy()
    slots = 400_000
    rep = sim(pol, slots, seed=42)
    pi = steady_state_for(pol.eps)
    gamma_r = achieved_loss_rate(pol.eps, pi)
    assert abs(rep.empirical_gamma - gamma_r) < 3 * math.sqrt(gamma_r * (1 - gamma_r) / slots)
    for occ, p in zip(rep.occupancy, pi):
        assert abs(occ - p) < 3 * math.sqrt(p * (1 - p) / slots)
    p_bar = float(np.dot(pol.powers, pi))
    p_var = float(np.dot(np.square(pol.powers), pi)) - p_bar**2
    assert abs(rep.avg_power - p_bar) < 3 * math.sqrt(p_var / slots)


def test_per_state_outage_frequency():
    pol = ref_policy()
    rep = sim(pol, 400_000, seed=9)
    for e, c, l in zip(pol.eps, rep.state_slots, rep.state_losses):
        assert c > 0
        se = math.sqrt(e * (1 - e) / c)
        assert abs(l / c - e) < 3 * se


def test_rate_identities_exact():
    pol = make_policy([0.3, 0.15, 0.05], [1.5, 0.7, 0.2], CH)
    rep = sim(pol, 50_000, seed=4)
    trans = sum(r * c for r, c in zip(pol.rates, rep.state_slots)) / 50_000
    deliv = sum(
        r * (c - l) for r, c, l in zip(pol.rates, rep.state_slots, rep.state_losses)
    ) / 50_000
    assert rep.transmitted_rate == trans
    assert rep.delivered_rate == deliv
    assert rep.delivered_rate <= rep.transmitted_rate
    assert sum(rep.occupancy) == pytest.approx(1.0, abs=1e-12)
    assert 0.0 <= rep.empirical_gamma <= 1.0


def test_conditional_burst_estimate():
    pol = ref_policy()
    rep = sim(pol, 300_000, seed=13)
    n = pol.n_states
    assert rep.empirical_eps_out == rep.state_losses[n] / rep.state_slots[n]
    assert rep.violations == rep.state_losses[n]
    se = math.sqrt(pol.eps[n] * (1 - pol.eps[n]) / rep.state_slots[n])
    assert abs(rep.empirical_eps_out - pol.eps[n]) < 4 * se


def test_run_histogram_accounts_every_loss_without_burnin():
    pol = make_policy([0.4, 0.3, 0.2], [1.0, 1.0, 1.0], CH)
    rep = sim(pol, 30_000, seed=2, burn_in=0)
    total_from_runs = sum(k * v for k, v in rep.run_length_histogram.items())
    assert total_from_runs == sum(rep.state_losses)
    assert all(k >= 1 for k in rep.run_length_histogram)
    # violations equal the slots by which runs exceeded the burst bound
    over = sum(
        (k - pol.n_states) * v
        for k, v in rep.run_length_histogram.items()
        if k > pol.n_states
    )
    assert rep.violations == over


def test_same_seed_same_report():
    pol = ref_policy()
    assert sim(pol, 20_000, seed=5) == sim(pol, 20_000, seed=5)
    assert sim(pol, 20_000, seed=5) != sim(pol, 20_000, seed=6)


def test_single_slot_report_well_formed():
    rep = sim(ref_policy(), 1, seed=0)
    assert sum(rep.occupancy) == pytest.approx(1.0)
    assert rep.empirical_gamma in (0.0, 1.0)
    assert rep.state_slots[0] + rep.state_slots[1] == 1


def test_config_validation():
    pol = ref_policy()
    with pytest.raises(ValueError, match="slots"):
        SimConfig(policy=pol, channel=CH, slots=0, seed=0, burst_bound=1)
    with pytest.raises(ValueError, match="burn_in"):
        SimConfig(policy=pol, channel=CH, slots=10, seed=0, burst_bound=1, burn_in=-1)
    with pytest.raises(ValueError, match="burst_bound"):
        SimConfig(policy=pol, channel=CH, slots=10, seed=0, burst_bound=2)


def spec_for(pol, eps_out=0.1):
    return ProblemSpec(
        gamma=0.2,
        n_states=pol.n_states,
        eps_out=eps_out,
        avg_rate=1.0,
        r_min=0.001,
        r_max=max_rate(100.0, CH),
        peak_power=100.0,
        channel=CH,
    )


def test_validate_consistent_policy_scores_low():
    pol = ref_policy()
    rec = validate(pol, spec_for(pol), 300_000, 21)
    assert rec.max_abs_z < 4.0
    assert rec.analytic_gamma == pytest.approx(0.2, abs=1e-12)
    assert rec.analytic_pi[0] == pytest.approx(0.8, abs=1e-12)
    assert rec.z_eps_out is not None


def test_validate_flags_corrupted_model():
    honest = ref_policy()
    # declared outage probabilities disagree with the actual (power, rate) pairs
    lying = Policy(eps=(0.45, 0.3), rates=honest.rates, powers=honest.powers)
    rec = validate(lying, spec_for(lying, eps_out=0.35), 300_000, 21)
    assert rec.max_abs_z > 4.0


def test_validate_degenerate_single_slot():
    pol = ref_policy()
    rec = validate(pol, spec_for(pol), 1, 0)
    assert rec.report.state_slots[0] + rec.report.state_slots[1] == 1
    assert math.isfinite(rec.z_gamma) or rec.z_gamma == 0.0


def test_occupancy_converges_across_seeds():
    pol = make_policy([0.35, 0.2, 0.12], [1.2, 0.8, 0.3], CH)
    pi = steady_state_for(pol.eps)
    slots = 100_000
    bad = 0
    for seed in range(5):
        rep = sim(pol, slots, seed=seed)
        for occ, p in zip(rep.occupancy, pi):
            if abs(occ - p) >= 5 * math.sqrt(p * (1 - p) / slots):
                bad += 1
    assert bad == 0
