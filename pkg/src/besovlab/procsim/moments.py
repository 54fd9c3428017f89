"""Increment-moment scaling: empirical check of E||X_t - X_s||^p0 <= K |t - s|^(p0 alpha)."""

import numpy as np

from ..errors import ValidationError
from .types import MomentEstimate


def _lag_steps(lags, spacing):
    steps = []
    for lag in lags:
        k = lag / spacing
        if k < 0.5 or abs(k - round(k)) > 1e-9 * max(1.0, k):
            raise ValidationError(f"lag {lag!r} is not a positive multiple of the grid spacing {spacing!r}")
        steps.append(int(round(k)))
    return steps


def moment_increment_slope(paths, p0: float, lags) -> MomentEstimate:
    """Fit ``log mean ||dX||^p0`` against ``log lag`` over all paths and start points.

    ``lags`` are time lags (multiples of the common grid spacing); at least
    four distinct ones are required. ``K_hat`` is ``exp(intercept)``.
    """
    lags = sorted(set(float(x) for x in lags))
    if len(lags) < 4:
        raise ValidationError(f"need at least 4 distinct lags, got {len(lags)}")
    if p0 < 1:
        raise ValidationError(f"p0 must be >= 1, got {p0}")
    if not paths:
        raise ValidationError("no paths given")
    spacing = paths[0].spacing
    steps = _lag_steps(lags, spacing)
    if max(steps) >= paths[0].n_points:
        raise ValidationError("largest lag exceeds the path length")
    moments = []
    for s in steps:
        tot, cnt = 0.0, 0
        for path in paths:
            inc = np.linalg.norm(path.values[s:] - path.values[:-s], axis=1)
            tot += np.sum(inc ** p0)
            cnt += inc.size
        moments.append(tot / cnt)
    slope, intercept = np.polyfit(np.log(lags), np.log(moments), 1)
    if not np.isfinite(slope):
        raise ValidationError("moment fit produced a non-finite slope")
    return MomentEstimate(p0=float(p0), slope=float(slope), K_hat=float(np.exp(intercept)),
                          lags=tuple(lags), moments=tuple(float(m) for m in moments))
