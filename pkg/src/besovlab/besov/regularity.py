"""Slope-based readouts of a dyadic profile: exponent estimates and Besov verdicts."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from ..errors import ValidationError
from .dyadic import DyadicProfile

MIN_LEVELS = 6


def upper_window(J_max: int) -> tuple[int, int]:
    return math.ceil(J_max / 2), J_max


def _window(profile: DyadicProfile, window):
    if profile.A.size < MIN_LEVELS:
        raise ValidationError(f"need at least {MIN_LEVELS} levels, got {profile.A.size}")
    lo, hi = upper_window(profile.J_max) if window is None else window
    if not 0 <= lo < hi <= profile.J_max:
        raise ValidationError(f"window {window} does not fit levels 0..{profile.J_max}")
    return int(lo), int(hi)


def _slope(j, y) -> float:
    return float(np.polyfit(j, y, 1)[0])


@dataclass(frozen=True)
class RegularityVerdict:
    nu: float
    nu_hat: float
    slope: float
    bounded: bool
    blows_up: bool
    little_besov: bool
    tau: float
    window: tuple

    def to_dict(self) -> dict:
        return asdict(self)


def estimate_exponent(profile: DyadicProfile, window=None) -> float:
    """Minus the least-squares slope of ``log2 A_j`` over the upper window."""
    lo, hi = _window(profile, window)
    A = profile.A[lo:hi + 1]
    if np.any(A <= 0):
        raise ValidationError("A_j = 0 inside the regression window")
    return -_slope(np.arange(lo, hi + 1), np.log2(A))


def classify_regularity(profile: DyadicProfile, nu: float, tau: float = 0.1, window=None) -> RegularityVerdict:
    """Decide boundedness / blow-up of the level statistic at smoothness ``nu``.

    The slope of ``log2`` of :meth:`DyadicProfile.statistic` over the window
    is compared with ``tau``: ``slope <= tau`` is bounded, otherwise blow-up;
    ``slope <= -tau`` additionally marks membership of the little space.
    """
    if not tau > 0:
        raise ValidationError(f"tau must be positive, got {tau}")
    lo, hi = _window(profile, window)
    stat = profile.statistic(nu)[lo:hi + 1]
    if np.any(stat <= 0):
        raise ValidationError("level statistic vanishes inside the regression window")
    slope = _slope(np.arange(lo, hi + 1), np.log2(stat))
    nu_hat = estimate_exponent(profile, (lo, hi))
    return RegularityVerdict(
        nu=float(nu), nu_hat=nu_hat, slope=slope,
        bounded=slope <= tau, blows_up=slope > tau, little_besov=slope <= -tau,
        tau=float(tau), window=(lo, hi),
    )
