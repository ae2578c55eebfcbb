import math

import numpy as np
import pytest
from scipy.stats import poisson as poisson_dist

from pgfad.lns import LogReal
from pgfad.model import (
    DistSpec,
    ModelParams,
    Observations,
    ZeroLikelihoodError,
    a_k,
    gamma_k,
    grad_log_likelihood,
    log_likelihood,
    loglik_and_grad,
    pgf_eval,
)
from pgfad.series import lift_const, lift_var
from pgfad.sim import simulate
from pgfad.trunc import adaptive_loglik

from conftest import assert_series_close, scalar_float


class TestDistSpec:
    def test_domain_validation(self):
        with pytest.raises(ValueError):
            DistSpec("bernoulli", 1.0)
        with pytest.raises(ValueError):
            DistSpec("poisson", 0.0)
        with pytest.raises(ValueError):
            DistSpec("gaussian", 0.5)

    def test_model_validation(self):
        with pytest.raises(ValueError):
            ModelParams.build(2, (0.5, 1.0), "bernoulli", 0.5, "poisson", 1.0)
        with pytest.raises(ValueError):
            ModelParams.build(2, 0.5, "bernoulli", 0.5, "poisson", (1.0, 2.0, 3.0))

    def test_flat_round_trip(self):
        mp = ModelParams.build(2, (0.3, 0.4), "bernoulli", 0.5, "poisson", (1.0, 2.0))
        assert mp.with_flat(mp.flat()) == mp


class TestPgfEval:
    @pytest.mark.parametrize(
        "spec",
        [
            DistSpec("bernoulli", 0.37),
            DistSpec("poisson", 2.5),
            DistSpec("geometric", 0.42),
        ],
    )
    def test_normalization_at_one(self, spec):
        tag = lift_var(1.0, 3).tag
        u = lift_const(1.0, 3, tag)
        out = pgf_eval(spec, u)
        assert scalar_float(out.coeff(0)) == pytest.approx(1.0, abs=1e-12)
        # and over the LNS scalar kind
        out2 = pgf_eval(spec, LogReal.one())
        assert out2.to_real() == pytest.approx(1.0, abs=1e-12)

    def test_bernoulli_is_linear(self):
        out = pgf_eval(DistSpec("bernoulli", 0.5), lift_var(0.0, 1))
        assert_series_close(out, [0.5, 0.5])

    def test_poisson_at_zero_is_mass_at_zero(self):
        out = pgf_eval(DistSpec("poisson", 2.0), LogReal.zero())
        assert out.to_real() == pytest.approx(math.exp(-2.0), rel=1e-12)

    def test_geometric_pgf_domain_check(self):
        with pytest.raises(ValueError):
            pgf_eval(DistSpec("geometric", 0.3), 2.0)

    def test_random_normalization(self, rng):
        for _ in range(20):
            fam = rng.choice(["bernoulli", "poisson", "geometric"])
            p = rng.uniform(0.1, 0.9) if fam != "poisson" else rng.uniform(0.2, 6.0)
            out = pgf_eval(DistSpec(str(fam), float(p)), LogReal.one())
            assert out.to_real() == pytest.approx(1.0, abs=1e-12)


class TestGammaA:
    def test_gamma_base_case_is_immigration_pgf(self):
        mp = ModelParams.build(1, 0.5, "bernoulli", 0.3, "poisson", 2.0)
        obs = Observations((0,))
        u = lift_var(LogReal.from_real(0.8), 2)
        got = gamma_k(u, 1, mp, obs)
        want = pgf_eval(mp.immigration[0], u)
        for a, b in zip(got.coeffs(), want.coeffs()):
            assert scalar_float(a) == pytest.approx(scalar_float(b), rel=1e-12)

    def test_gamma_normalization(self):
        mp = ModelParams.build(1, 0.5, "bernoulli", 0.3, "poisson", 2.0)
        out = gamma_k(LogReal.one(), 1, mp, Observations((0,)))
        assert out.to_real() == pytest.approx(1.0, rel=1e-12)

    def test_gamma_two_steps_hand_expanded(self):
        # y_1 = 0 and rho_1 ~ 0 gives Gamma_2(u) = G(F(u)) G(u); with
        # Bernoulli(0.4) offspring and Poisson(2) immigration at u = 0.7
        # that is exp(-0.3 * 2 * 1.4)
        mp = ModelParams.build(2, (1e-12, 0.5), "bernoulli", 0.4, "poisson", 2.0)
        obs = Observations((0, 0))
        out = gamma_k(LogReal.from_real(0.7), 2, mp, obs)
        assert out.to_real() == pytest.approx(math.exp(-0.84), rel=1e-9)

    def test_a_with_zero_count_is_gamma_at_thinned_argument(self):
        mp = ModelParams.build(1, 0.35, "bernoulli", 0.3, "poisson", 2.0)
        obs = Observations((0,))
        s = LogReal.from_real(0.9)
        got = a_k(s, 1, mp, obs)
        want = gamma_k(LogReal.from_real(0.9 * 0.65), 1, mp, obs)
        assert got.to_real() == pytest.approx(want.to_real(), rel=1e-12)

    def test_a_base_case(self):
        mp = ModelParams.build(1, 0.5, "bernoulli", 0.3, "poisson", 2.0)
        out = a_k(LogReal.from_real(0.4), 0, mp, Observations((0,)))
        assert out.to_real() == 1.0

    def test_a1_closed_form_poisson(self):
        # A_1(1) = rho^y lam^y / y! * exp(-lam rho)
        lam, rho, y = 10.0, 0.6, 7
        mp = ModelParams.build(1, rho, "bernoulli", 0.5, "poisson", lam)
        out = a_k(LogReal.one(), 1, mp, Observations((y,)))
        want = (rho * lam) ** y / math.factorial(y) * math.exp(-lam * rho)
        assert out.to_real() == pytest.approx(want, rel=1e-11)


class TestLogLikelihood:
    def test_k1_thinned_poisson(self):
        mp = ModelParams.build(1, 0.6, "bernoulli", 0.5, "poisson", 10.0)
        ll = log_likelihood(mp, Observations((7,)))
        assert ll == pytest.approx(poisson_dist.logpmf(7, 6.0), abs=1e-10)

    def test_all_zero_counts_hand_pgf(self):
        # K = 2, every y = 0: log L = lam1 ((1 - d2 r2)(1 - r1) - 1) - lam2 r2
        r1, r2, d2, lam1, lam2 = 0.3, 0.6, 0.5, 4.0, 7.0
        mp = ModelParams.build(2, (r1, r2), "bernoulli", (0.2, d2),
                               "poisson", (lam1, lam2))
        ll = log_likelihood(mp, Observations((0, 0)))
        want = lam1 * ((1 - d2 * r2) * (1 - r1) - 1) - lam2 * r2
        assert ll == pytest.approx(want, abs=1e-10)

    def test_five_step_model_matches_oracle(self):
        mp = ModelParams.build(
            5, 0.5, "bernoulli", 0.5, "poisson", (12.5, 55.0, 105.0, 75.0, 20.0)
        )
        obs = Observations(simulate(mp, 1).y)
        ll = log_likelihood(mp, obs)
        tv, n, conv = adaptive_loglik(mp, obs)
        assert conv
        assert abs(ll - tv) <= 1e-5

    def test_likelihood_is_a_probability(self, rng):
        for _ in range(5):
            K = int(rng.integers(1, 4))
            mp = ModelParams.build(
                K, float(rng.uniform(0.2, 0.8)), "poisson",
                float(rng.uniform(0.2, 0.8)), "poisson", float(rng.uniform(1, 10)),
            )
            obs = Observations(simulate(mp, int(rng.integers(1000))).y)
            ll = log_likelihood(mp, obs)
            assert math.isfinite(ll) and ll <= 0.0

    def test_monotone_evidence(self, rng):
        # appending one more observed step cannot increase the joint probability
        for trial in range(5):
            K = int(rng.integers(1, 4))
            lam = float(rng.uniform(2, 10))
            delta = float(rng.uniform(0.2, 0.8))
            rho = float(rng.uniform(0.2, 0.8))
            mp = ModelParams.build(K, rho, "bernoulli", delta, "poisson", lam)
            mp_ext = ModelParams.build(K + 1, rho, "bernoulli", delta, "poisson", lam)
            y = simulate(mp_ext, 500 + trial).y
            short = log_likelihood(mp, Observations(y[:K]))
            full = log_likelihood(mp_ext, Observations(y))
            assert full <= short + 1e-12

    def test_geometric_families_against_oracle(self):
        mp = ModelParams.build(2, 0.5, "geometric", 0.6, "geometric", 0.2)
        obs = Observations(simulate(mp, 11).y)
        ll = log_likelihood(mp, obs)
        tv, _, conv = adaptive_loglik(mp, obs)
        assert conv and abs(ll - tv) <= 1e-5

    def test_float_backend_agrees_at_small_scale(self):
        mp = ModelParams.build(3, 0.5, "poisson", 0.4, "poisson", 6.0)
        obs = Observations(simulate(mp, 5).y)
        assert log_likelihood(mp, obs, backend="float") == pytest.approx(
            log_likelihood(mp, obs), rel=1e-9
        )

    def test_structurally_zero_likelihood_is_minus_inf(self):
        # Bernoulli immigration admits at most one arrival per step, and
        # Bernoulli offspring cannot multiply them, so y_1 = 3 is impossible
        mp = ModelParams.build(1, 0.5, "bernoulli", 0.5, "bernoulli", 0.5)
        ll = log_likelihood(mp, Observations((3,)))
        assert ll == -math.inf


class TestGradients:
    def test_k1_closed_form(self):
        mp = ModelParams.build(1, 0.6, "bernoulli", 0.5, "poisson", 10.0)
        g = grad_log_likelihood(mp, Observations((7,)))
        assert g[2] == pytest.approx(7 / 10.0 - 0.6, rel=1e-11)  # y/lam - rho
        assert g[0] == pytest.approx(7 / 0.6 - 10.0, rel=1e-11)  # y/rho - lam

    def test_dead_parameter_is_exactly_zero(self):
        mp = ModelParams.build(1, 0.6, "bernoulli", 0.5, "poisson", 10.0)
        g = grad_log_likelihood(mp, Observations((7,)))
        assert g[1] == 0.0  # step-1 offspring never enters the recursion

    def test_zero_likelihood_raises(self):
        mp = ModelParams.build(1, 0.5, "bernoulli", 0.5, "bernoulli", 0.5)
        with pytest.raises(ZeroLikelihoodError):
            grad_log_likelihood(mp, Observations((3,)))

    def test_random_models_match_central_differences(self, rng):
        for trial in range(4):
            K = int(rng.integers(1, 4))
            fam = ["bernoulli", "poisson"][trial % 2]
            mp = ModelParams.build(
                K,
                tuple(rng.uniform(0.25, 0.75, K)),
                fam,
                tuple(rng.uniform(0.3, 0.7, K)),
                "poisson",
                tuple(rng.uniform(2.0, 9.0, K)),
            )
            obs = Observations(simulate(mp, 7000 + trial).y)
            ll, g = loglik_and_grad(mp, obs)
            assert ll == pytest.approx(log_likelihood(mp, obs), abs=1e-9)
            flat = mp.flat()
            for i in range(3 * K):
                h = 1e-5 * max(1.0, abs(flat[i]))
                hi, lo = flat.copy(), flat.copy()
                hi[i] += h
                lo[i] -= h
                fd = (
                    log_likelihood(mp.with_flat(hi), obs)
                    - log_likelihood(mp.with_flat(lo), obs)
                ) / (2 * h)
                assert abs(g[i] - fd) / max(abs(fd), 1e-8) < 1e-4
