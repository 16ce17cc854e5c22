import math

import numpy as np
import pytest
from scipy.stats import norm

from quadconcord._rng import generator
from quadconcord.exceptions import CholeskyError, ConfigError, DataError
from quadconcord.model import GaussianModel
from quadconcord.mvn import (
    DEFAULT_MAX_EVALS,
    N_SHIFTS,
    ProbEstimate,
    SignedRectangle,
    cholesky,
    rect_prob,
    rect_seed,
    sample,
)

from conftest import random_pd_model


def orthant_exact(rho):
    return 0.25 + math.asin(rho) / (2 * math.pi)


class TestCholesky:
    def test_identity(self):
        np.testing.assert_array_equal(cholesky(np.eye(4)), np.eye(4))

    def test_rank_one_fails_at_pivot_two(self):
        with pytest.raises(CholeskyError) as err:
            cholesky([[1.0, 1.0], [1.0, 1.0]])
        assert err.value.pivot == 2

    def test_hand_example(self):
        L = cholesky([[4.0, 2.0], [2.0, 3.0]])
        np.testing.assert_allclose(L, [[2.0, 0.0], [1.0, math.sqrt(2)]], rtol=1e-15)

    def test_reconstruction_random(self):
        gen = generator(11)
        for _ in range(200):
            n = int(gen.integers(1, 9))
            A = gen.normal(size=(n, n))
            cov = A @ A.T + 0.1 * np.eye(n)
            L = cholesky(cov)
            np.testing.assert_allclose(L @ L.T, cov, rtol=1e-10, atol=1e-12)
            assert np.all(np.diag(L) > 0)
            assert np.allclose(L, np.tril(L))

    def test_asymmetric_rejected(self):
        with pytest.raises(DataError):
            cholesky([[1.0, 0.3], [0.2, 1.0]])


class TestSignedRectangle:
    def test_bounds_ordering_enforced(self):
        with pytest.raises(ConfigError):
            SignedRectangle(lower=[1.0, 0.0], upper=[0.0, 1.0])

    def test_equal_bounds_allowed(self):
        r = SignedRectangle(lower=[0.0, 0.0], upper=[0.0, 1.0])
        assert r.dim == 2

    def test_weight_validated(self):
        with pytest.raises(ConfigError):
            SignedRectangle(lower=[0.0], upper=[1.0], weight=2)


class TestRectProb:
    def test_quarter_orthant_independent(self):
        m = GaussianModel(mean=[0, 0], cov=np.eye(2))
        r = SignedRectangle(lower=[0, 0], upper=[np.inf, np.inf])
        p = rect_prob(m, r, seed=1)
        assert abs(p.value - 0.25) <= max(p.abs_error, 1e-6)

    def test_orthant_rho_half(self):
        m = GaussianModel(mean=[0, 0], cov=[[1, 0.5], [0.5, 1]])
        r = SignedRectangle(lower=[0, 0], upper=[np.inf, np.inf])
        p = rect_prob(m, r, seed=2)
        assert abs(p.value - 1 / 3) <= 1e-5

    def test_full_space_exact(self):
        m = random_pd_model(generator(3))
        r = SignedRectangle(lower=[-np.inf] * 4, upper=[np.inf] * 4)
        p = rect_prob(m, r, seed=3)
        assert p == ProbEstimate(1.0, 0.0, 0)

    def test_zero_width_exact(self):
        m = random_pd_model(generator(4))
        r = SignedRectangle(lower=[0.0, -np.inf, 0, 0], upper=[0.0, np.inf, 1, 1])
        assert rect_prob(m, r, seed=4) == ProbEstimate(0.0, 0.0, 0)

    def test_univariate_margin_closed_form(self):
        # one finite coordinate: value equals a Phi difference
        m = GaussianModel(mean=[0.3, -0.2], cov=[[2.0, 0.7], [0.7, 1.5]])
        r = SignedRectangle(lower=[-1.0, -np.inf], upper=[2.0, np.inf])
        p = rect_prob(m, r, tol=1e-7, seed=5)
        exact = norm.cdf((2.0 - 0.3) / math.sqrt(2)) - norm.cdf((-1.0 - 0.3) / math.sqrt(2))
        assert abs(p.value - exact) <= max(3e-7, 3 * p.abs_error)

    def test_dimension_mismatch(self):
        m = GaussianModel(mean=[0, 0], cov=np.eye(2))
        with pytest.raises(ConfigError):
            rect_prob(m, SignedRectangle(lower=[0] * 4, upper=[1] * 4), seed=0)

    def test_dimension_guard(self):
        dim = 34
        m = GaussianModel(mean=np.zeros(dim), cov=np.eye(dim))
        r = SignedRectangle(lower=np.zeros(dim), upper=np.ones(dim))
        with pytest.raises(ConfigError, match="beyond"):
            rect_prob(m, r, seed=0)

    def test_deterministic_given_seed(self):
        m = random_pd_model(generator(6))
        r = SignedRectangle(lower=[-1, -1, -1, -1], upper=[1, 0.5, 2, 1])
        assert rect_prob(m, r, seed=42) == rect_prob(m, r, seed=42)

    def test_budget_flag(self):
        m = random_pd_model(generator(7))
        r = SignedRectangle(lower=[-1, -1, -1, -1], upper=[1, 1, 1, 1])
        budget = N_SHIFTS * 53
        p = rect_prob(m, r, tol=1e-12, max_evals=budget, seed=8)
        assert p.evaluations == budget
        assert p.abs_error > 1e-12

    def test_monotone_under_inclusion(self):
        gen = generator(9)
        for trial in range(1000):
            m = random_pd_model(gen)
            inner_lo = gen.normal(0, 1, 4)
            width = gen.uniform(0.2, 2.0, 4)
            outer_pad = gen.uniform(0.0, 1.0, 4)
            r_in = SignedRectangle(lower=inner_lo, upper=inner_lo + width)
            r_out = SignedRectangle(
                lower=inner_lo - outer_pad, upper=inner_lo + width + outer_pad
            )
            p_in = rect_prob(m, r_in, tol=1e-3, seed=rect_seed(trial, r_in))
            p_out = rect_prob(m, r_out, tol=1e-3, seed=rect_seed(trial, r_out))
            assert p_in.value <= p_out.value + p_in.abs_error + p_out.abs_error

    def test_complement_identity(self):
        # P(rect) plus its 2d-slab complement decomposition sums to 1
        gen = generator(10)
        for trial in range(1000):
            m = random_pd_model(gen)
            lo = gen.normal(0, 1, 4)
            hi = lo + gen.uniform(0.3, 2.5, 4)
            total, err = 0.0, 0.0
            p = rect_prob(m, SignedRectangle(lower=lo, upper=hi), tol=1e-3, seed=trial)
            total += p.value
            err += p.abs_error
            for k in range(4):
                for low_side in (True, False):
                    slab_lo = np.where(np.arange(4) < k, lo, -np.inf).astype(float)
                    slab_hi = np.where(np.arange(4) < k, hi, np.inf).astype(float)
                    if low_side:
                        slab_hi[k] = lo[k]
                    else:
                        slab_lo[k] = hi[k]
                    rect = SignedRectangle(lower=slab_lo, upper=slab_hi)
                    q = rect_prob(m, rect, tol=1e-3, seed=rect_seed(trial, rect))
                    total += q.value
                    err += q.abs_error
            assert abs(total - 1.0) <= err + 1e-9

    def test_translation_invariance(self):
        gen = generator(12)
        for trial in range(1000):
            m = random_pd_model(gen)
            lo = gen.normal(0, 1, 4)
            hi = lo + gen.uniform(0.3, 2.5, 4)
            shift = gen.normal(0, 2, 4)
            tol = 1e-4
            p1 = rect_prob(m, SignedRectangle(lower=lo, upper=hi), tol=tol, seed=trial)
            m2 = GaussianModel(mean=m.mean + shift, cov=m.cov)
            p2 = rect_prob(
                m2, SignedRectangle(lower=lo + shift, upper=hi + shift), tol=tol, seed=trial
            )
            assert abs(p1.value - p2.value) <= 2 * tol

    def test_agrees_with_sampling_frequency(self):
        # spec-level cross-check: QMC value vs frequency over 1e6 draws
        gen = generator(13)
        n = 10**6
        for trial in range(20):
            m = random_pd_model(gen)
            lo = gen.normal(0, 1, 4)
            hi = lo + gen.uniform(0.5, 3.0, 4)
            rect = SignedRectangle(lower=lo, upper=hi)
            p = rect_prob(m, rect, tol=1e-5, seed=trial)
            z = sample(m, n, seed=1000 + trial)
            freq = float(np.all((z > lo) & (z < hi), axis=1).mean())
            mc_se = math.sqrt(max(freq * (1 - freq), 1e-12) / n)
            assert abs(p.value - freq) <= 3 * (mc_se + p.abs_error) + 1e-9


class TestSample:
    def test_component_means_clt(self):
        m = GaussianModel(mean=np.zeros(4), cov=np.eye(4))
        n = 10**6
        z = sample(m, n, seed=21)
        assert np.all(np.abs(z.mean(axis=0)) <= 4 / math.sqrt(n))

    def test_bit_identical(self):
        m = random_pd_model(generator(22))
        np.testing.assert_array_equal(sample(m, 1, seed=5), sample(m, 1, seed=5))
        np.testing.assert_array_equal(sample(m, 1000, seed=5), sample(m, 1000, seed=5))

    def test_covariance_recovered(self):
        m = random_pd_model(generator(23))
        z = sample(m, 200_000, seed=7)
        np.testing.assert_allclose(np.cov(z, rowvar=False), m.cov, atol=0.02)

    def test_invalid_n(self):
        m = random_pd_model(generator(24))
        with pytest.raises(ConfigError):
            sample(m, 0, seed=0)
