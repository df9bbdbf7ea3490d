import io
import math

import numpy as np
import pytest

from smqdyn.classical_semimarkov import ProbabilityVector, SemiMarkovSpec, propagator
from smqdyn.montecarlo import (
    Estimate,
    SimConfig,
    estimate_generating_function,
    estimate_jump_probability,
    sample_jump_count,
    simulate_two_state,
    trajectory_rng,
    write_estimates_csv,
)
from smqdyn.renewal import even_odd_difference, generating_function, jump_probability
from smqdyn.waiting_time import HypoExpWTD

ERLANG2 = HypoExpWTD.erlang(2, 1.0)
EXP1 = HypoExpWTD.exponential(1.0)
TIMES = [0.5, 2.0, 5.0, 9.0]
CFG = SimConfig(n_traj=10000, seed=2024, horizon=10.0)


class TestSampling:
    def test_zero_time_has_zero_jumps(self):
        assert sample_jump_count(ERLANG2, 0.0, trajectory_rng(1, 0)) == 0

    def test_memoryless_mean_matches_poisson(self):
        counts = [
            sample_jump_count(EXP1, 1.0, trajectory_rng(5, i)) for i in range(5000)
        ]
        se = np.std(counts, ddof=1) / math.sqrt(len(counts))
        assert abs(np.mean(counts) - 1.0) < 3 * se

    def test_parity_estimate_matches_analytic(self):
        q = even_odd_difference(ERLANG2)
        est = estimate_generating_function(ERLANG2, -1.0, [10.0], CFG)[0]
        assert est.covers(q(10.0))


class TestEstimators:
    def test_deterministic_given_seed(self):
        a = estimate_generating_function(ERLANG2, -1.0, TIMES, CFG)
        b = estimate_generating_function(ERLANG2, -1.0, TIMES, CFG)
        assert all(
            x.mean == y.mean and x.std_error == y.std_error for x, y in zip(a, b)
        )

    def test_mu_one_has_zero_variance(self):
        est = estimate_generating_function(ERLANG2, 1.0, [3.0], CFG)[0]
        assert est.mean == 1.0 and est.std_error == 0.0

    def test_mu_zero_estimates_survival(self):
        g = ERLANG2.survival()
        for t, est in zip(TIMES, estimate_generating_function(ERLANG2, 0.0, TIMES, CFG)):
            assert est.covers(g(t))

    def test_generic_mu_covers_analytic(self):
        gf = generating_function(HypoExpWTD([1.0, 0.5]), 0.5)
        ests = estimate_generating_function(HypoExpWTD([1.0, 0.5]), 0.5, TIMES, CFG)
        for t, est in zip(TIMES, ests):
            assert est.covers(gf.value(t))

    def test_jump_count_pmf_covers_analytic(self):
        for n in (0, 1, 3):
            p = jump_probability(ERLANG2, n)
            ests = estimate_jump_probability(ERLANG2, n, TIMES, CFG)
            for t, est in zip(TIMES, ests):
                assert est.covers(p(t))

    def test_times_beyond_horizon_rejected(self):
        with pytest.raises(ValueError):
            estimate_generating_function(ERLANG2, 0.5, [11.0], CFG)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SimConfig(0, 1, 1.0)
        with pytest.raises(ValueError):
            SimConfig(10, 1, 0.0)


class TestTwoState:
    def test_degenerate_initial_state_is_exact_at_time_zero(self):
        spec = SemiMarkovSpec(0.5, 0.5, EXP1)
        est = simulate_two_state(spec, ProbabilityVector((1.0, 0.0)), [0.0], CFG)[0]
        assert est.mean == 1.0 and est.std_error == 0.0

    def test_uniform_chain_matches_closed_form(self):
        spec = SemiMarkovSpec(0.5, 0.5, EXP1)
        p0 = ProbabilityVector((1.0, 0.0))
        ests = simulate_two_state(spec, p0, TIMES, CFG)
        for t, est in zip(TIMES, ests):
            exact = propagator(spec, t, 0.0).apply(p0).p[0]
            assert est.covers(exact)

    def test_alternating_chain_matches_closed_form(self):
        spec = SemiMarkovSpec(0.0, 1.0, HypoExpWTD([1.0, 0.5]))
        p0 = ProbabilityVector((0.8, 0.2))
        ests = simulate_two_state(spec, p0, TIMES, CFG)
        for t, est in zip(TIMES, ests):
            exact = propagator(spec, t, 0.0).apply(p0).p[0]
            assert est.covers(exact)


class TestCoverage:
    def test_three_sigma_interval_coverage(self):
        """Fresh (deterministic) seeds: the analytic value must fall inside
        the 3-sigma band in at least 99 of 100 repetitions."""
        q = even_odd_difference(ERLANG2)
        target = q(2.0)
        hits = 0
        for k in range(100):
            cfg = SimConfig(n_traj=2000, seed=10_000 + k, horizon=2.0)
            est = estimate_generating_function(ERLANG2, -1.0, [2.0], cfg)[0]
            hits += est.covers(target)
        assert hits >= 99


class TestCsvInterface:
    def test_schema_and_content(self):
        ests = [Estimate(0.5, 0.01, 100), Estimate(0.25, 0.02, 100)]
        cfg = SimConfig(n_traj=100, seed=7, horizon=4.0)
        buf = io.StringIO()
        write_estimates_csv(buf, "survival", [1.0, 2.0], ests, cfg)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "t,quantity,mean,std_error,n_traj,seed"
        assert lines[1] == "1,survival,0.5,0.01,100,7"
        assert lines[2] == "2,survival,0.25,0.02,100,7"
