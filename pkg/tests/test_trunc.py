import math

import numpy as np
import pytest
from scipy.stats import binom, poisson

from pgfad.model import ModelParams, Observations
from pgfad.sim import simulate
from pgfad.trunc import TruncConfig, adaptive_loglik, transition_row, truncated_loglik


class TestTransitionRow:
    def test_empty_population_row_is_immigration_pmf(self):
        mp = ModelParams.build(1, 0.5, "bernoulli", 0.4, "poisson", 3.0)
        row = transition_row(0, 1, mp, 40)
        np.testing.assert_allclose(row, poisson.pmf(np.arange(41), 3.0), rtol=1e-10)

    def test_certain_survival_no_immigration_is_near_point_mass(self):
        mp = ModelParams.build(1, 0.5, "bernoulli", 1 - 1e-12, "poisson", 1e-12)
        row = transition_row(5, 1, mp, 20)
        assert row[5] == pytest.approx(1.0, abs=1e-9)
        assert row.sum() == pytest.approx(1.0, abs=1e-9)

    def test_poisson_additivity(self):
        # three Poisson(0.5) parents + Poisson(2) immigration = Poisson(3.5)
        mp = ModelParams.build(1, 0.5, "poisson", 0.5, "poisson", 2.0)
        row = transition_row(3, 1, mp, 60)
        np.testing.assert_allclose(row, poisson.pmf(np.arange(61), 3.5), rtol=1e-9)

    def test_row_mass(self, rng):
        mp = ModelParams.build(1, 0.5, "poisson", 0.5, "poisson", 4.0)
        for n in (0, 3, 10):
            expected_pop = 0.5 * n + 4.0
            N = int(10 * expected_pop) + 10
            row = transition_row(n, 1, mp, N)
            assert row.sum() <= 1.0 + 1e-12
            assert row.sum() >= 1.0 - 1e-6

    def test_geometric_offspring_row_is_negative_binomial(self):
        from scipy.stats import nbinom

        mp = ModelParams.build(1, 0.5, "geometric", 0.6, "poisson", 1e-12)
        row = transition_row(4, 1, mp, 50)
        np.testing.assert_allclose(row, nbinom.pmf(np.arange(51), 4, 0.6), rtol=1e-8)


class TestTruncatedLoglik:
    def test_k1_thinned_poisson_closed_form(self):
        mp = ModelParams.build(1, 0.7, "bernoulli", 0.5, "poisson", 6.0)
        ll = truncated_loglik(mp, Observations((5,)), N=120)
        assert ll == pytest.approx(poisson.logpmf(5, 4.2), abs=1e-8)

    def test_tiny_cap_is_strongly_biased(self):
        mp = ModelParams.build(1, 0.7, "bernoulli", 0.5, "poisson", 20.0)
        obs = Observations((10,))
        biased = truncated_loglik(mp, obs, N=10)
        good = truncated_loglik(mp, obs, N=400)
        assert biased < good - 1e-3

    def test_nondecreasing_in_n(self, rng):
        mp = ModelParams.build(2, 0.5, "poisson", 0.6, "poisson", 5.0)
        obs = Observations(simulate(mp, 3).y)
        vals = [truncated_loglik(mp, obs, N) for N in (8, 16, 32, 64, 128)]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_matches_explicit_transition_matrix_forward(self):
        # the fused per-column recursion equals the textbook alpha . P form
        mp = ModelParams.build(2, (0.4, 0.6), "bernoulli", 0.5, "poisson", 3.0)
        obs = Observations((2, 4))
        N = 32
        lalpha = np.full(N + 1, -np.inf)
        lalpha[0] = 0.0
        for k in (1, 2):
            P = np.vstack([transition_row(n, k, mp, N) for n in range(N + 1)])
            alpha = np.exp(lalpha)
            pred = alpha @ P
            emis = binom.pmf(obs.y[k - 1], np.arange(N + 1), mp.rho[k - 1])
            with np.errstate(divide="ignore"):
                lalpha = np.log(pred * emis)
        want = lalpha.max() + math.log(np.exp(lalpha - lalpha.max()).sum())
        got = truncated_loglik(mp, obs, N)
        assert got == pytest.approx(want, abs=1e-10)


class TestAdaptive:
    def test_small_model_converges(self):
        mp = ModelParams.build(1, 0.5, "bernoulli", 0.5, "poisson", 2.0)
        val, n, converged = adaptive_loglik(mp, Observations((1,)))
        assert converged
        assert n <= 128
        assert val == pytest.approx(poisson.logpmf(1, 1.0), abs=1e-6)

    def test_cap_reached_is_reported_not_raised(self):
        mp = ModelParams.build(1, 0.5, "bernoulli", 0.5, "poisson", 50.0)
        val, n, converged = adaptive_loglik(
            mp, Observations((30,)), TruncConfig(cap=32)
        )
        assert not converged
        assert n == 32
        assert math.isfinite(val)

    def test_deterministic_restart(self):
        mp = ModelParams.build(2, 0.5, "poisson", 0.5, "poisson", 4.0)
        obs = Observations((3, 5))
        a = adaptive_loglik(mp, obs)
        b = adaptive_loglik(mp, obs)
        assert a == b
