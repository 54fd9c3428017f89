"""Dyadic Besov statistics of paths and local times."""

from .dyadic import (
    DyadicProfile, PqNorm, besov_pq_norm, dyadic_profile, modulus_lp, seminorm_from_profile, shifted_lp_norm,
)
from .grr import GrrCase, grr_check, grr_integral, grr_rhs, random_admissible_exponents, random_piecewise_linear
from .regularity import RegularityVerdict, classify_regularity, estimate_exponent, upper_window
from .uniform import uniform_localtime_statistic

__all__ = [
    "DyadicProfile", "GrrCase", "PqNorm", "RegularityVerdict", "besov_pq_norm", "classify_regularity",
    "dyadic_profile", "estimate_exponent", "grr_check", "grr_integral", "grr_rhs", "modulus_lp",
    "random_admissible_exponents", "random_piecewise_linear", "seminorm_from_profile", "shifted_lp_norm",
    "uniform_localtime_statistic", "upper_window",
]
