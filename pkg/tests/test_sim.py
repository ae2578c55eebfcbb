import numpy as np
import pytest

from pgfad.model import ModelParams, Observations, log_likelihood
from pgfad.sim import Trajectory, simulate, simulate_many


class TestDeterminism:
    def test_same_seed_same_trajectory(self):
        mp = ModelParams.build(4, 0.5, "poisson", 0.7, "poisson", 6.0)
        assert simulate(mp, 123) == simulate(mp, 123)
        assert simulate(mp, 123) != simulate(mp, 124)

    def test_pinned_fixture(self):
        # a frozen trajectory guards against silent RNG or draw-order changes
        mp = ModelParams.build(3, 0.5, "bernoulli", 0.5, "poisson", 8.0)
        assert simulate(mp, 42) == Trajectory(n=(10, 17, 15), y=(7, 7, 6), seed=42)

    def test_simulate_many_uses_consecutive_seeds(self):
        mp = ModelParams.build(2, 0.5, "poisson", 0.5, "poisson", 3.0)
        many = simulate_many(mp, 7, 3)
        assert [t.seed for t in many] == [7, 8, 9]
        assert many[1] == simulate(mp, 8)


class TestEdgeCases:
    def test_full_detection_observes_everything(self):
        mp = ModelParams.build(5, 1 - 1e-12, "poisson", 0.8, "poisson", 5.0)
        t = simulate(mp, 0)
        assert t.y == t.n

    def test_no_immigration_keeps_population_empty(self):
        mp = ModelParams.build(5, 0.5, "bernoulli", 0.5, "poisson", 1e-12)
        t = simulate(mp, 0)
        assert t.n == (0,) * 5 and t.y == (0,) * 5

    def test_observed_never_exceeds_latent(self):
        mp = ModelParams.build(6, 0.5, "geometric", 0.5, "poisson", 4.0)
        for seed in range(50):
            t = simulate(mp, seed)
            assert all(y <= n for y, n in zip(t.y, t.n))


class TestMoments:
    def test_mean_recursion(self):
        # E n_k = delta E n_{k-1} + lam for Bernoulli offspring
        lam, delta, K, reps = 6.0, 0.6, 3, 100_000
        mp = ModelParams.build(K, 0.5, "bernoulli", delta, "poisson", lam)
        counts = np.array([simulate(mp, s).n for s in range(reps)], dtype=float)
        expect = []
        e = 0.0
        for _ in range(K):
            e = delta * e + lam
            expect.append(e)
        mean = counts.mean(axis=0)
        se = counts.std(axis=0) / np.sqrt(reps)
        assert np.all(np.abs(mean - np.array(expect)) <= 3.0 * se)


class TestLikelihoodSanity:
    def test_true_parameters_beat_perturbed_on_average(self):
        true = ModelParams.build(3, 0.5, "bernoulli", 0.5, "poisson", 6.0)
        wrong = ModelParams.build(3, 0.5, "bernoulli", 0.5, "poisson", 9.0)
        datasets = [Observations(t.y) for t in simulate_many(true, 100, 30)]
        ll_true = sum(log_likelihood(true, o) for o in datasets)
        ll_wrong = sum(log_likelihood(wrong, o) for o in datasets)
        assert ll_true > ll_wrong
