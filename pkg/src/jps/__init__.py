"""Non-parametric estimation from judgment post-stratified samples."""

__version__ = "0.1.0"

from .distcat import Distribution, GFunction, MomentError, parse_distribution, parse_g
from .coeffs import CoefficientSet, WeightScheme, coefficient_set
from .strata import StratumMoments, stratum_cdfs, stratum_moments

__all__ = [
    "CoefficientSet",
    "Distribution",
    "GFunction",
    "MomentError",
    "StratumMoments",
    "WeightScheme",
    "coefficient_set",
    "parse_distribution",
    "parse_g",
    "stratum_cdfs",
    "stratum_moments",
]
