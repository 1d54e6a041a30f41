"""Adaptive Metropolis-Hastings-within-Gibbs sampling for (alpha, beta).

One chain updates one parameter at a time in a fixed scan order (alpha
first, then each coefficient).  alpha is proposed by a Gaussian random walk
on log(alpha), which requires the Jacobian term log(alpha'/alpha) in the
acceptance log-ratio; coefficients are proposed on their own scale.  During
burn-in only, each proposal scale is multiplied (divided) by
``adapt_factor`` whenever its acceptance rate over the last ``adapt_batch``
iterations exceeds (falls below) the target band; scales are frozen from
burn-in onward so the retained draws come from a fixed kernel.

Randomness comes from numpy's PCG64 generator seeded via SeedSequence, so
runs are reproducible bit-for-bit across platforms; concurrent chains
should derive independent streams by spawning from one SeedSequence.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .gedist import log1mexp

if TYPE_CHECKING:  # pragma: no cover
    from .model import ModelSpec

__all__ = [
    "ChainConfig",
    "PosteriorDraws",
    "run_chain",
    "credible_interval",
    "effective_sample_size",
]


@dataclass(frozen=True)
class ChainConfig:
    """MCMC run lengths, seed and adaptation schedule.

    ``seed`` may be an int or a ``numpy.random.SeedSequence`` (the latter is
    how concurrent replicates get independent, reproducible streams).
    """

    n_iter: int
    burn_in: int
    thin: int = 1
    seed: int | np.random.SeedSequence = 0
    target_accept: tuple[float, float] = (0.3, 0.5)
    adapt_batch: int = 50
    adapt_factor: float = 1.1
    init_scale_log_alpha: float = 0.1
    init_scale_beta: float = 0.05

    def __post_init__(self) -> None:
        if self.n_iter < 1 or not 0 <= self.burn_in < self.n_iter:
            raise ValueError("need 0 <= burn_in < n_iter")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        lo, hi = self.target_accept
        if not 0 < lo < hi < 1:
            raise ValueError("target_accept must be an interval inside (0, 1)")
        if self.adapt_batch < 1 or self.adapt_factor <= 1:
            raise ValueError("adapt_batch >= 1 and adapt_factor > 1 required")
        if (self.n_iter - self.burn_in) // self.thin < 1:
            raise ValueError("no draws would be retained; lengthen the chain or "
                             "reduce thinning")

    @property
    def n_retained(self) -> int:
        return (self.n_iter - self.burn_in) // self.thin


@dataclass(frozen=True)
class PosteriorDraws:
    """Retained post-burn-in draws plus per-parameter chain diagnostics."""

    alpha: np.ndarray
    beta: np.ndarray
    acceptance_rates: np.ndarray  # post-burn-in, order (alpha, beta_1, ..., beta_K)
    proposal_scales: np.ndarray  # frozen scales, same order
    flags: tuple[str, ...] = field(default=())

    @property
    def n_retained(self) -> int:
        return self.alpha.shape[0]

    @property
    def failed(self) -> bool:
        return any(f.startswith("zero_acceptance") for f in self.flags)


def _run_componentwise(target, config: ChainConfig, rng: np.random.Generator):
    """Generic single-site MH loop over a target adapter.

    The adapter carries current parameter values and exposes
    ``propose_delta(k, new) -> d_log_posterior`` and ``commit(k, new)``;
    ``log_scale[k]`` marks parameters proposed multiplicatively.
    """
    n_params = target.n_params
    log_scale = np.asarray(target.log_scale, dtype=bool)
    values = np.array(target.initial_values(), dtype=float)
    scales = np.array(target.initial_scales(config), dtype=float)

    lo, hi = config.target_accept
    retained = np.empty((config.n_retained, n_params))
    batch_accept = np.zeros(n_params, dtype=int)
    post_accept = np.zeros(n_params, dtype=int)
    r = 0
    for it in range(1, config.n_iter + 1):
        for k in range(n_params):
            eps = rng.normal(0.0, scales[k])
            if log_scale[k]:
                log_new = math.log(values[k]) + eps
                # overflow/underflow of exp maps to inf/0, which the target
                # rejects; keeps extreme adapted scales from crashing
                new = math.exp(log_new) if log_new < 709.0 else math.inf
                jac = eps  # log(new/current) for the multiplicative walk
            else:
                new = values[k] + eps
                jac = 0.0
            log_ratio = target.propose_delta(k, new) + jac
            # NaN compares False, so a degenerate proposal is rejected
            if math.log(rng.random()) < log_ratio:
                target.commit(k, new)
                values[k] = new
                batch_accept[k] += 1
                if it > config.burn_in:
                    post_accept[k] += 1
        if it <= config.burn_in and it % config.adapt_batch == 0:
            rate = batch_accept / config.adapt_batch
            scales[rate > hi] *= config.adapt_factor
            scales[rate < lo] /= config.adapt_factor
            batch_accept[:] = 0
        if it > config.burn_in and (it - config.burn_in) % config.thin == 0:
            retained[r] = values
            r += 1
    accept_rates = post_accept / float(config.n_iter - config.burn_in)
    return retained, accept_rates, scales


class _GERegressionTarget:
    """Cached log-posterior for GE regression, updated one coordinate at a time.

    The log-likelihood decomposes as
    ``n*log(alpha) + sum(eta) + (alpha-1)*L1 - S`` with ``eta`` the linear
    predictor, ``t = exp(eta)*y``, ``L1 = sum(log(-expm1(-t)))`` and
    ``S = sum(t)``, so an alpha move costs O(1) and a coefficient move only
    touches the rows where its basis column is nonzero.  Running sums are
    recomputed from scratch periodically to stop float drift.
    """

    RESYNC_EVERY = 4000  # commits between full recomputations of the running sums

    def __init__(self, spec: "ModelSpec", y: np.ndarray, x: np.ndarray, beta_init: np.ndarray):
        self.spec = spec
        self.y = np.asarray(y, dtype=float)
        self.n = self.y.size
        self.X = spec.build_design(x)
        K = self.X.shape[1]
        self.supports = []
        self.col_vals = []
        self.col_sums = np.empty(K)
        for k in range(K):
            idx = np.nonzero(self.X[:, k])[0]
            self.supports.append(idx)
            self.col_vals.append(self.X[idx, k].copy())
            self.col_sums[k] = self.X[:, k].sum()

        self.alpha = 1.0
        self.beta = np.array(beta_init, dtype=float)
        self.eta = self.X @ self.beta
        self._recompute_state()

        self.n_params = 1 + K
        self.log_scale = [True] + [False] * K
        self._commits = 0
        self._pending = None

    def _recompute_state(self) -> None:
        self.t = np.exp(self.eta) * self.y
        self.lg = np.asarray(log1mexp(self.t))
        self.sum_eta = float(self.eta.sum())
        self.S = float(self.t.sum())
        self.L1 = float(self.lg.sum())

    def initial_values(self):
        return np.concatenate([[self.alpha], self.beta])

    def initial_scales(self, config: ChainConfig):
        return np.concatenate([[config.init_scale_log_alpha],
                               np.full(self.beta.size, config.init_scale_beta)])

    def _log_lik_terms(self, alpha: float, sum_eta: float, L1: float, S: float) -> float:
        return self.n * math.log(alpha) + sum_eta + (alpha - 1.0) * L1 - S

    def propose_delta(self, k: int, new: float) -> float:
        if k == 0:
            if not 0.0 < new < math.inf:
                return -math.inf
            d_ll = self.n * (math.log(new) - math.log(self.alpha)) + (new - self.alpha) * self.L1
            d_prior = self.spec.alpha_prior.log_density(new) - self.spec.alpha_prior.log_density(self.alpha)
            self._pending = ("alpha", new)
            return d_ll + d_prior
        j = k - 1
        if not math.isfinite(new):
            return -math.inf
        idx = self.supports[j]
        delta = new - self.beta[j]
        eta_new = self.eta[idx] + delta * self.col_vals[j]
        with np.errstate(over="ignore"):
            t_new = np.exp(eta_new) * self.y[idx]
        lg_new = np.asarray(log1mexp(t_new))
        d_S = float(t_new.sum()) - float(self.t[idx].sum())
        d_L1 = float(lg_new.sum()) - float(self.lg[idx].sum())
        d_sum_eta = delta * self.col_sums[j]
        d_ll = d_sum_eta + (self.alpha - 1.0) * d_L1 - d_S
        bp = self.spec.beta_prior
        d_prior = bp.log_density(new) - bp.log_density(self.beta[j])
        self._pending = ("beta", j, idx, eta_new, t_new, lg_new, d_S, d_L1, d_sum_eta)
        return d_ll + d_prior

    def commit(self, k: int, new: float) -> None:
        pending = self._pending
        if k == 0:
            self.alpha = new
        else:
            _, j, idx, eta_new, t_new, lg_new, d_S, d_L1, d_sum_eta = pending
            self.beta[j] = new
            self.eta[idx] = eta_new
            self.t[idx] = t_new
            self.lg[idx] = lg_new
            self.S += d_S
            self.L1 += d_L1
            self.sum_eta += d_sum_eta
            self._commits += 1
            if self._commits % self.RESYNC_EVERY == 0:
                self._recompute_state()
        self._pending = None

    def log_posterior(self) -> float:
        """Current joint log posterior, for cross-checks against the direct formula."""
        lp = self._log_lik_terms(self.alpha, self.sum_eta, self.L1, self.S)
        lp += self.spec.alpha_prior.log_density(self.alpha)
        lp += sum(self.spec.beta_prior.log_density(b) for b in self.beta)
        return lp


def run_chain(spec: "ModelSpec", y, x, config: ChainConfig) -> PosteriorDraws:
    """Draw from the joint posterior of (alpha, beta) for one dataset.

    Starts at alpha = 1 with beta at the exponential-model (alpha = 1)
    maximum-likelihood estimate.  Deterministic given ``config.seed``.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.size == 0 or y.size != x.size:
        raise ValueError("need matching, nonempty y and x")
    from .model import mle_beta_under_exponential

    beta_init = mle_beta_under_exponential(spec, y, x)
    target = _GERegressionTarget(spec, y, x, beta_init)
    seed = config.seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    rng = np.random.default_rng(seed)
    retained, accept, scales = _run_componentwise(target, config, rng)

    flags = []
    for k, rate in enumerate(accept):
        if rate == 0.0:
            name = "alpha" if k == 0 else f"beta_{k}"
            flags.append(f"zero_acceptance:{name}")
    if flags:
        warnings.warn("chain had parameters with zero post-burn-in acceptance: "
                      + ", ".join(flags), RuntimeWarning)
    return PosteriorDraws(
        alpha=retained[:, 0].copy(),
        beta=retained[:, 1:].copy(),
        acceptance_rates=accept,
        proposal_scales=scales,
        flags=tuple(flags),
    )


def credible_interval(draws, level: float = 0.95) -> tuple[float, float]:
    """Equal-tailed empirical interval (type-7 percentile interpolation)."""
    draws = np.asarray(draws, dtype=float)
    if draws.size < 2:
        raise ValueError("need at least two draws")
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")
    tail = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(draws, [tail, 100.0 - tail])
    return float(lo), float(hi)


def effective_sample_size(draws) -> float:
    """ESS from the initial positive sequence of autocorrelation pairs."""
    x = np.asarray(draws, dtype=float)
    n = x.size
    if n < 10:
        raise ValueError("need at least 10 draws")
    x = x - x.mean()
    var = float(np.dot(x, x))
    if var == 0.0:
        warnings.warn("constant chain: ESS is not defined, returning n", RuntimeWarning)
        return float(n)
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n].real
    rho = acov / acov[0]
    # sum adjacent-pair sums while they stay positive (they are nonincreasing
    # in expectation for a reversible chain)
    tau = -1.0
    m = 0
    while 2 * m + 1 < n:
        pair = rho[2 * m] + rho[2 * m + 1]
        if pair <= 0.0:
            break
        tau += 2.0 * pair
        m += 1
    tau = max(tau, 1.0 / n)
    return float(min(n / tau, n))
