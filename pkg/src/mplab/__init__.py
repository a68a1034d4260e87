"""Marchenko-Pastur laboratory: the law, its Stieltjes transforms, Kolmogorov
distances with a smoothing-inequality bound, and Monte Carlo sweeps over
sample covariance matrices."""
from __future__ import annotations

from .distance import DistanceReport, SmoothingConfig, default_config, desk_config, kolmogorov, smoothing_bound
from .ensembles import EntryDistribution, MatrixShape, sample_matrix, split_seed
from .errors import *  # noqa: F401,F403
from .mp_law import MPParams, RateScale, SpectralDomain, cdf, density, stieltjes_mp, stieltjes_sym, sym_cdf, sym_density
from .spectral import SpectralDecomposition, StepDistribution, eigen_sym, esd, sym_esd

__version__ = "0.1.0"
