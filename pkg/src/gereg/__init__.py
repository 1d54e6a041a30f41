"""Bayesian generalized exponential regression for wet-day rainfall trends.

A GE likelihood with a log-linked rate modeled either linearly or through
cubic B-splines, a distance-based shrinkage prior on the shape parameter,
adaptive MH-within-Gibbs inference, WAIC comparison, a simulation-study
harness and a preprocessing pipeline for daily rainfall CSVs.
"""

__version__ = "0.1.0"

from .gedist import GEParams
from .model import FittedModel, ModelSpec, fit_model
from .priors import BetaPrior, GammaPrior, PCPrior
from .sampler import ChainConfig, PosteriorDraws, run_chain

__all__ = [
    "__version__",
    "GEParams",
    "ModelSpec",
    "FittedModel",
    "fit_model",
    "PCPrior",
    "GammaPrior",
    "BetaPrior",
    "ChainConfig",
    "PosteriorDraws",
    "run_chain",
]
