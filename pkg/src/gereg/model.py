"""GE regression model: likelihood, posterior, WAIC and posterior functionals.

The rate parameter is exp of a linear predictor in a rescaled covariate:
either an intercept-and-slope form or a clamped cubic B-spline expansion.
Posterior functionals (mean curve, probability-rainfall quantile curves,
rate of change of the mean, decadal shift) are deterministic maps of the
retained draws, summarized pointwise by the posterior mean and an
equal-tailed 95% interval (type-7 percentiles).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import gedist, splines
from .priors import AlphaPrior, BetaPrior
from .sampler import ChainConfig, PosteriorDraws, run_chain

__all__ = [
    "LINEAR",
    "SPLINE",
    "ModelSpec",
    "FittedModel",
    "CurveSummary",
    "ScalarSummary",
    "rate",
    "log_likelihood",
    "log_posterior",
    "waic",
    "loglik_matrix",
    "fit_model",
    "mean_curve",
    "probability_rainfall",
    "rate_of_change",
    "decadal_shift",
    "mle_beta_under_exponential",
    "mle_beta_for_design",
]

LINEAR = "linear"
SPLINE = "spline"

LOG_LIK_FLOOR = -1e300  # stands in for -inf so MH ratios reject cleanly


@dataclass(frozen=True)
class ModelSpec:
    """Rate-model form, priors, and the covariate rescaling map.

    The raw covariate interval ``domain`` is mapped affinely onto [0, 1]
    before either form is evaluated; coefficients therefore live on the
    rescaled scale and the map is needed to interpret them.
    """

    rate_form: str
    domain: tuple[float, float]
    alpha_prior: AlphaPrior
    beta_prior: BetaPrior
    basis: splines.SplineBasis | None = None

    def __post_init__(self) -> None:
        if self.rate_form not in (LINEAR, SPLINE):
            raise ValueError(f"unknown rate form {self.rate_form!r}")
        if self.rate_form == SPLINE:
            if self.basis is None:
                raise ValueError("spline form needs a SplineBasis")
            if self.basis.domain != self.domain:
                raise ValueError("basis domain must match the model domain")
        elif self.basis is not None:
            raise ValueError("linear form takes no basis")
        lo, hi = self.domain
        if not hi > lo:
            raise ValueError(f"degenerate covariate domain [{lo}, {hi}]")

    @classmethod
    def linear(cls, domain, alpha_prior: AlphaPrior,
               beta_prior: BetaPrior | None = None) -> "ModelSpec":
        return cls(LINEAR, (float(domain[0]), float(domain[1])), alpha_prior,
                   beta_prior or BetaPrior())

    @classmethod
    def spline(cls, K: int, domain, alpha_prior: AlphaPrior,
               beta_prior: BetaPrior | None = None) -> "ModelSpec":
        basis = splines.make_basis(K, domain)
        return cls(SPLINE, basis.domain, alpha_prior, beta_prior or BetaPrior(), basis)

    @property
    def n_coef(self) -> int:
        return 2 if self.rate_form == LINEAR else self.basis.num_basis

    def to_unit(self, x) -> np.ndarray:
        lo, hi = self.domain
        u = (np.asarray(x, dtype=float) - lo) / (hi - lo)
        if np.any(u < -1e-12) or np.any(u > 1.0 + 1e-12):
            raise ValueError(f"covariate outside the fitted domain [{lo}, {hi}]")
        return np.clip(u, 0.0, 1.0)

    def build_design(self, x) -> np.ndarray:
        """Design matrix rows for raw covariate values; shape (n, n_coef)."""
        if self.rate_form == LINEAR:
            u = np.atleast_1d(self.to_unit(x))
            return np.column_stack([np.ones(u.size), u])
        return splines.design_matrix(self.basis, x)

    def build_design_deriv(self, x) -> np.ndarray:
        """d(design)/d(raw covariate) rows, matching ``build_design``."""
        if self.rate_form == LINEAR:
            u = np.atleast_1d(self.to_unit(x))
            scale = 1.0 / (self.domain[1] - self.domain[0])
            return np.column_stack([np.zeros(u.size), np.full(u.size, scale)])
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        return np.vstack([splines.eval_basis_deriv(self.basis, v) for v in xs])


def rate(spec: ModelSpec, beta, x):
    """exp of the linear predictor at raw covariate x; strictly positive."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (spec.n_coef,):
        raise ValueError(f"expected {spec.n_coef} coefficients, got shape {beta.shape}")
    out = np.exp(spec.build_design(x) @ beta)
    return float(out[0]) if np.ndim(x) == 0 else out


def _loglik_from_eta(alpha: float, eta: np.ndarray, y: np.ndarray) -> float:
    t = np.exp(eta) * y
    lg = np.asarray(gedist.log1mexp(t))
    value = y.size * np.log(alpha) + eta.sum() + (alpha - 1.0) * lg.sum() - t.sum()
    return float(value)


def log_likelihood(spec: ModelSpec, alpha: float, beta, y, x) -> float:
    """Sum of GE log densities at rate(spec, beta, x_i) for each y_i."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    y = np.asarray(y, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (spec.n_coef,):
        raise ValueError(f"expected {spec.n_coef} coefficients, got shape {beta.shape}")
    if np.any(y <= 0):
        return LOG_LIK_FLOOR
    eta = spec.build_design(x) @ beta
    value = _loglik_from_eta(alpha, eta, y)
    return value if np.isfinite(value) else LOG_LIK_FLOOR


def log_posterior(spec: ModelSpec, alpha: float, beta, y, x) -> float:
    """Unnormalized log posterior: likelihood plus both prior terms."""
    beta = np.asarray(beta, dtype=float)
    lp = log_likelihood(spec, alpha, beta, y, x)
    lp += float(np.sum(priors_beta_terms(spec, beta)))
    lp += spec.alpha_prior.log_density(alpha)
    return lp


def priors_beta_terms(spec: ModelSpec, beta) -> np.ndarray:
    return np.array([spec.beta_prior.log_density(b) for b in np.asarray(beta, dtype=float)])


def waic(loglik: np.ndarray) -> float:
    """WAIC = -2 * (lppd - p_waic); lower is better.

    ``loglik`` has one row per retained draw and one column per
    observation.  lppd uses log-sum-exp over draws; the penalty is the sum
    of per-observation draw variances (unbiased).
    """
    loglik = np.asarray(loglik, dtype=float)
    if loglik.ndim != 2 or loglik.shape[0] < 2 or loglik.shape[1] < 1:
        raise ValueError("need a (draws >= 2) x (observations >= 1) matrix")
    if not np.all(np.isfinite(loglik)):
        raise ValueError("log-likelihood matrix has non-finite entries")
    S = loglik.shape[0]
    m = loglik.max(axis=0)
    lppd = float(np.sum(m + np.log(np.mean(np.exp(loglik - m), axis=0))))
    p_waic = float(np.sum(np.var(loglik, axis=0, ddof=1)))
    return -2.0 * (lppd - p_waic)


def loglik_matrix(spec: ModelSpec, draws: PosteriorDraws, y, x) -> np.ndarray:
    """Per-draw, per-observation log density matrix (S x n)."""
    y = np.asarray(y, dtype=float)
    X = spec.build_design(x)
    out = np.empty((draws.n_retained, y.size))
    for s in range(draws.n_retained):
        eta = X @ draws.beta[s]
        t = np.exp(eta) * y
        out[s] = np.log(draws.alpha[s]) + eta + (draws.alpha[s] - 1.0) * gedist.log1mexp(t) - t
    return out


@dataclass(frozen=True)
class FittedModel:
    """Posterior draws for one model specification plus its WAIC."""

    spec: ModelSpec
    draws: PosteriorDraws
    waic: float

    def __post_init__(self) -> None:
        if self.draws.beta.shape[1] != self.spec.n_coef:
            raise ValueError("draw dimensions do not match the model specification")

    @property
    def acceptance_rates(self) -> np.ndarray:
        return self.draws.acceptance_rates


def fit_model(spec: ModelSpec, y, x, config: ChainConfig) -> FittedModel:
    """Run one chain and attach the WAIC of the fit."""
    draws = run_chain(spec, y, x, config)
    return FittedModel(spec=spec, draws=draws, waic=waic(loglik_matrix(spec, draws, y, x)))


# ---------------------------------------------------------------------------
# posterior functionals


@dataclass(frozen=True)
class CurveSummary:
    """Pointwise posterior mean and equal-tailed interval over a grid."""

    grid: np.ndarray
    mean: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    level: float = 0.95


@dataclass(frozen=True)
class ScalarSummary:
    mean: float
    lo: float
    hi: float
    level: float = 0.95


def _summarize(grid: np.ndarray, per_draw: np.ndarray, level: float) -> CurveSummary:
    tail = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(per_draw, [tail, 100.0 - tail], axis=0)
    return CurveSummary(grid=grid, mean=per_draw.mean(axis=0), lo=lo, hi=hi, level=level)


def _per_draw_mu(fit: FittedModel, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-draw mean curve mu_s(t) and the rates lam_s(t), shapes (S, T)."""
    if fit.draws.n_retained == 0:
        raise ValueError("no retained draws")
    X = fit.spec.build_design(ts)
    lam = np.exp(fit.draws.beta @ X.T)
    c = gedist.digamma(fit.draws.alpha + 1.0) + gedist.EULER_GAMMA
    return c[:, None] / lam, lam


def mean_curve(fit: FittedModel, ts, level: float = 0.95) -> CurveSummary:
    """Posterior summary of the GE mean mu(t) = [psi(alpha+1)-psi(1)]/lam(t)."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    mu, _ = _per_draw_mu(fit, ts)
    return _summarize(ts, mu, level)


def probability_rainfall(fit: FittedModel, ts, probs=(0.3, 0.5, 0.7),
                         level: float = 0.95) -> dict[float, CurveSummary]:
    """Per-year summaries of the (1-p)th quantile for each p in ``probs``.

    "100p% probability rainfall" is the amount exceeded with probability p,
    i.e. the (1-p)th quantile, so the 30% curve lies above the 70% curve.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if any(not 0 < p < 1 for p in probs):
        raise ValueError("probabilities must lie in (0, 1)")
    _, lam = _per_draw_mu(fit, ts)
    alpha = fit.draws.alpha[:, None]
    out = {}
    for p in probs:
        q = 1.0 - p
        out[p] = _summarize(ts, -np.log1p(-np.exp(np.log(q) / alpha)) / lam, level)
    return out


def rate_of_change(fit: FittedModel, ts, level: float = 0.95) -> CurveSummary:
    """Posterior summary of d(mu)/dt for the spline rate form.

    With lam(t) = exp(g(t)) and g(t) = sum_k beta_k B_k(t), the chain rule
    gives d(mu)/dt = -mu(t) * g'(t); g' uses the analytic basis derivatives.
    """
    if fit.spec.rate_form != SPLINE:
        raise ValueError("rate_of_change applies to the spline form only; for the "
                         "linear form the slope is -mu(t) * beta_1 / (domain width)")
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    mu, _ = _per_draw_mu(fit, ts)
    gprime = fit.draws.beta @ fit.spec.build_design_deriv(ts).T
    return _summarize(ts, -mu * gprime, level)


def linear_trend_slope(fit: FittedModel, ts, level: float = 0.95) -> CurveSummary:
    """d(mu)/dt for the linear rate form: -mu(t) * beta_1 / (domain width)."""
    if fit.spec.rate_form != LINEAR:
        raise ValueError("linear_trend_slope applies to the linear form only")
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    mu, _ = _per_draw_mu(fit, ts)
    gprime = fit.draws.beta @ fit.spec.build_design_deriv(ts).T
    return _summarize(ts, -mu * gprime, level)


def decadal_shift(fit: FittedModel, t0: float | None = None, t1: float | None = None,
                  level: float = 0.95) -> ScalarSummary:
    """Posterior summary of (mu(t1) - mu(t0)) / number of decades."""
    lo, hi = fit.spec.domain
    t0 = lo if t0 is None else float(t0)
    t1 = hi if t1 is None else float(t1)
    mu, _ = _per_draw_mu(fit, np.array([t0, t1]))
    per_draw = (mu[:, 1] - mu[:, 0]) / ((t1 - t0) / 10.0)
    tail = 100.0 * (1.0 - level) / 2.0
    qlo, qhi = np.percentile(per_draw, [tail, 100.0 - tail])
    return ScalarSummary(mean=float(per_draw.mean()), lo=float(qlo), hi=float(qhi), level=level)


# ---------------------------------------------------------------------------
# chain initialization


def mle_beta_for_design(X: np.ndarray, y: np.ndarray, max_iter: int = 100) -> np.ndarray:
    """MLE of the exponential GLM (log link) by damped Newton iterations.

    The objective sum(eta_i - y_i*exp(eta_i)) is concave in beta; a
    rank-deficient design makes the Newton system singular and raises.
    Falls back to the zero vector with a warning if not converged.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.zeros(X.shape[1])

    def objective(b):
        eta = X @ b
        with np.errstate(over="ignore"):
            return float(np.sum(eta - y * np.exp(eta)))

    obj = objective(beta)
    for _ in range(max_iter):
        lam_y = y * np.exp(X @ beta)
        grad = X.T @ (1.0 - lam_y)
        hess = X.T @ (X * lam_y[:, None])
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as exc:
            raise ValueError("rank-deficient design matrix in exponential MLE") from exc
        if not np.all(np.isfinite(step)):
            raise ValueError("exponential MLE produced a non-finite Newton step")
        size = 1.0
        for _ in range(40):
            cand = beta + size * step
            cand_obj = objective(cand)
            if np.isfinite(cand_obj) and cand_obj >= obj - 1e-12:
                break
            size *= 0.5
        beta = beta + size * step
        new_obj = objective(beta)
        if abs(new_obj - obj) < 1e-12 * (1.0 + abs(obj)) and np.max(np.abs(grad)) < 1e-8:
            return beta
        obj = new_obj
    warnings.warn("exponential-GLM Newton did not converge; starting from zeros",
                  RuntimeWarning)
    return np.zeros(X.shape[1])


def mle_beta_under_exponential(spec: ModelSpec, y, x) -> np.ndarray:
    """Coefficient start values: the alpha = 1 (exponential) MLE."""
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValueError("need nonempty data")
    return mle_beta_for_design(spec.build_design(x), y)
