import math
import warnings

import numpy as np
import pytest
import scipy.stats

from gereg import sampler, simlab
from gereg.model import ModelSpec
from gereg.priors import PCPrior
from gereg.sampler import ChainConfig, credible_interval, effective_sample_size, run_chain


class ScalarTarget:
    """Minimal adapter around an explicit log density, for engine tests."""

    def __init__(self, logpdf, x0, log_scale=False, scale=0.5):
        self.logpdf = logpdf
        self.x = float(x0)
        self.n_params = 1
        self.log_scale = [log_scale]
        self._scale = scale

    def initial_values(self):
        return np.array([self.x])

    def initial_scales(self, config):
        return np.array([self._scale])

    def propose_delta(self, k, new):
        return self.logpdf(new) - self.logpdf(self.x)

    def commit(self, k, new):
        self.x = new


def run_scalar(logpdf, x0, config, log_scale=False, scale=0.5):
    target = ScalarTarget(logpdf, x0, log_scale=log_scale, scale=scale)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    draws, accept, scales = sampler._run_componentwise(target, config, rng)
    return draws[:, 0], accept[0], scales[0]


class TestChainConfig:
    def test_retained_counts(self):
        assert ChainConfig(4000, 2000, 5).n_retained == 400
        assert ChainConfig(10000, 3000, 5).n_retained == 1400

    @pytest.mark.parametrize("kwargs", [
        dict(n_iter=100, burn_in=100),
        dict(n_iter=100, burn_in=50, thin=0),
        dict(n_iter=100, burn_in=50, target_accept=(0.5, 0.3)),
        dict(n_iter=100, burn_in=50, adapt_factor=1.0),
        dict(n_iter=100, burn_in=99, thin=5),  # would retain nothing
    ])
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            ChainConfig(**kwargs)


class TestEngine:
    def test_standard_normal_target(self):
        config = ChainConfig(n_iter=50000, burn_in=1000, thin=1, seed=2)
        draws, accept, _ = run_scalar(lambda x: -0.5 * x * x, 0.0, config)
        assert abs(draws.mean()) < 0.05
        assert 0.9 < draws.var(ddof=1) < 1.1
        assert 0.2 < accept < 0.7

    def test_log_scale_jacobian_recovers_gamma(self):
        # Gamma(3, 2) up to a constant; the multiplicative walk needs the
        # Jacobian term, without it the sampled law would be Gamma(4, 2)
        config = ChainConfig(n_iter=60000, burn_in=2000, thin=1, seed=4)
        draws, _, _ = run_scalar(lambda x: 2.0 * math.log(x) - 2.0 * x if x > 0 else -math.inf,
                                 1.0, config, log_scale=True)
        ref = scipy.stats.gamma(3.0, scale=0.5)
        assert draws.mean() == pytest.approx(1.5, abs=0.05)
        for q in [0.1, 0.25, 0.5, 0.75, 0.9]:
            assert ref.cdf(np.quantile(draws, q)) == pytest.approx(q, abs=0.02)

    def test_adaptation_freezes_at_burn_in(self):
        # same seed and burn-in but different total lengths leave scales equal
        logpdf = lambda x: -0.5 * x * x
        _, _, s1 = run_scalar(logpdf, 0.0, ChainConfig(600, 500, 1, seed=9))
        _, _, s2 = run_scalar(logpdf, 0.0, ChainConfig(5000, 500, 1, seed=9))
        assert s1 == s2

    def test_adaptation_moves_scales_during_burn_in(self):
        logpdf = lambda x: -0.5 * x * x
        _, _, s_tiny = run_scalar(logpdf, 0.0, ChainConfig(3000, 2500, 1, seed=9),
                                  scale=1e-4)
        assert s_tiny > 1e-4  # tiny steps accept too often, scale grows
        _, _, s_huge = run_scalar(logpdf, 0.0, ChainConfig(3000, 2500, 1, seed=9),
                                  scale=1e4)
        assert s_huge < 1e4


class TestRunChain:
    @pytest.fixture(scope="class")
    def dataset(self):
        return simlab.gen_dataset("linear", 2.0, 99, 42)

    @pytest.fixture(scope="class")
    def spec(self, dataset):
        _, x = dataset
        return ModelSpec.linear((x.min(), x.max()), PCPrior(2.5))

    def test_retained_counts_simulation_protocol(self, dataset, spec):
        y, x = dataset
        draws = run_chain(spec, y, x, ChainConfig(4000, 2000, 5, seed=1))
        assert draws.n_retained == 400
        assert draws.alpha.shape == (400,)
        assert draws.beta.shape == (400, 2)
        assert np.all(draws.alpha > 0)

    def test_deterministic(self, dataset, spec):
        y, x = dataset
        config = ChainConfig(1500, 500, 5, seed=11)
        d1 = run_chain(spec, y, x, config)
        d2 = run_chain(spec, y, x, config)
        np.testing.assert_array_equal(d1.alpha, d2.alpha)
        np.testing.assert_array_equal(d1.beta, d2.beta)
        np.testing.assert_array_equal(d1.proposal_scales, d2.proposal_scales)

    def test_acceptance_band(self, dataset, spec):
        y, x = dataset
        draws = run_chain(spec, y, x, ChainConfig(4000, 2000, 5, seed=3))
        assert np.all(draws.acceptance_rates >= 0.25)
        assert np.all(draws.acceptance_rates <= 0.55)

    def test_cached_posterior_matches_direct_formula(self, dataset, spec):
        from gereg import model
        from gereg.sampler import _GERegressionTarget
        y, x = dataset
        beta0 = model.mle_beta_under_exponential(spec, y, x)
        target = _GERegressionTarget(spec, y, x, beta0)
        rng = np.random.default_rng(0)
        # random walk through propose/commit, cross-checking the cached value
        values = target.initial_values()
        for step in range(200):
            k = step % target.n_params
            new = values[k] * math.exp(rng.normal(0, 0.1)) if k == 0 \
                else values[k] + rng.normal(0, 0.1)
            target.propose_delta(k, new)
            target.commit(k, new)
            values[k] = new
        direct = model.log_posterior(spec, values[0], values[1:], y, x)
        assert target.log_posterior() == pytest.approx(direct, abs=1e-8)

    def test_zero_acceptance_flagged(self, dataset, spec):
        y, x = dataset
        # frozen gigantic proposal scales reject everything after burn-in
        config = ChainConfig(n_iter=300, burn_in=10, thin=1, seed=5,
                             adapt_batch=1000, init_scale_log_alpha=1e6,
                             init_scale_beta=1e6)
        with pytest.warns(RuntimeWarning, match="zero post-burn-in acceptance"):
            draws = run_chain(spec, y, x, config)
        assert draws.failed
        assert any(f.startswith("zero_acceptance") for f in draws.flags)

    def test_rejects_empty_data(self, spec):
        with pytest.raises(ValueError):
            run_chain(spec, [], [], ChainConfig(100, 50, 1, seed=0))


class TestCredibleInterval:
    def test_hand_percentiles(self):
        lo, hi = credible_interval(np.arange(1.0, 101.0), level=0.9)
        # type-7 interpolation gives (5.95, 95.05); the hand values from
        # counting are within half a rank
        assert lo == pytest.approx(5.95, rel=1e-12)
        assert hi == pytest.approx(95.05, rel=1e-12)
        assert abs(lo - 5.5) <= 0.5 and abs(hi - 95.5) <= 0.5

    def test_constant_draws(self):
        lo, hi = credible_interval(np.full(50, 3.3))
        assert lo == hi == 3.3

    def test_contains_median(self):
        rng = np.random.default_rng(6)
        draws = rng.gamma(2.0, 1.0, 501)
        lo, hi = credible_interval(draws, level=0.5)
        med = np.median(draws)
        assert lo <= med <= hi

    def test_needs_two_draws(self):
        with pytest.raises(ValueError):
            credible_interval([1.0])


class TestEffectiveSampleSize:
    def test_iid_normal(self):
        rng = np.random.default_rng(7)
        draws = rng.normal(size=10 ** 4)
        ess = effective_sample_size(draws)
        assert 0.8 * 10 ** 4 <= ess <= 1.2 * 10 ** 4

    def test_ar1_chain(self):
        rho = 0.9
        rng = np.random.default_rng(8)
        n = 200000
        x = np.empty(n)
        x[0] = 0.0
        noise = rng.normal(size=n) * math.sqrt(1 - rho ** 2)
        for i in range(1, n):
            x[i] = rho * x[i - 1] + noise[i]
        expected = n * (1 - rho) / (1 + rho)
        assert effective_sample_size(x) == pytest.approx(expected, rel=0.3)

    def test_constant_chain_flagged(self):
        with pytest.warns(RuntimeWarning, match="constant chain"):
            assert effective_sample_size(np.full(100, 2.0)) == 100.0

    def test_never_exceeds_n(self):
        rng = np.random.default_rng(9)
        for _ in range(5):
            draws = rng.normal(size=500)
            assert effective_sample_size(draws) <= 500

    def test_needs_ten_draws(self):
        with pytest.raises(ValueError):
            effective_sample_size(np.ones(5))
