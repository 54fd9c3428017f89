"""Dyadic statistic of local-time increments taken uniformly in space.

For a field ``L(x, t)`` on a time grid of ``N = 2^J`` intervals (time
rescaled to ``[0, 1]``) and level ``j`` with ``M = N / 2^j`` steps per cell:

    g_j(r) = sup_x |L(x, r + 2^-j) - L(x, r)|            (sup over bins)
    S_j    = 2^(j q nu - j) sum_{k=1}^{2^j-1} int_0^1 g_j(2^-j (s + k - 1))^q ds

with the ``s`` integral a rectangle rule on the ``M`` grid offsets of a cell.
The same quantity written directly as ``2^(j q nu) int_{I(2^-j)} g_j^q``
(left-rectangle rule, so it equals ``S_j`` up to rounding) is returned as
``S_direct``; ``S_shift_sup`` replaces the fixed shift by a sup
over shifts ``h <= 2^-j`` (on a sub-lattice of at most ``max_shifts`` values).
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from .dyadic import DyadicProfile

_BIN_CHUNK = 256


def _sup_increment(counts: np.ndarray, s: int) -> np.ndarray:
    """``max_bins |counts[:, i + s] - counts[:, i]|`` for every start ``i`` (integer counts)."""
    n_t = counts.shape[1]
    out = np.zeros(n_t - s, dtype=counts.dtype)
    for lo in range(0, counts.shape[0], _BIN_CHUNK):
        blk = counts[lo:lo + _BIN_CHUNK]
        np.maximum(out, np.max(np.abs(blk[:, s:] - blk[:, :-s]), axis=0), out=out)
    return out


def uniform_localtime_statistic(field, q: float, nu: float, J_max: int | None = None,
                                max_shifts: int = 8) -> DyadicProfile:
    """Per-level local-time statistic ``S_j`` as a ``localtime_uniform`` profile.

    ``max_shifts = 0`` skips the shift-sup form (it costs ``max_shifts`` extra
    passes over the field per level).
    """
    if not q >= 1:
        raise ValidationError(f"q must be >= 1, got {q}")
    if nu < 0:
        raise ValidationError(f"nu must be non-negative, got {nu}")
    counts = field.flat_counts()
    scale = field.scale
    N = counts.shape[1] - 1
    if N < 1:
        raise ValidationError("field has a single time point")
    J_res = (N & -N).bit_length() - 1  # largest j with 2^j | N
    if J_max is None:
        J_max = max(0, J_res - 2)
    if int(J_max) != J_max or J_max < 0 or J_max > J_res:
        raise ValidationError(f"J_max = {J_max} is beyond the field's dyadic time resolution ({J_res})")
    J_max = int(J_max)

    A = np.zeros(J_max + 1)
    S = np.zeros(J_max + 1)
    S_direct = np.zeros(J_max + 1)
    S_shift = np.zeros(J_max + 1)
    for j in range(J_max + 1):
        M = N >> j
        if j == 0:
            # I(1) = {0}: no interior cells, every form vanishes
            continue
        g = _sup_increment(counts, M) * scale
        gq = g ** q
        cells = gq[: (2 ** j - 1) * M].reshape(2 ** j - 1, M)
        S[j] = 2.0 ** (j * q * nu - j) * np.sum(cells.mean(axis=1))
        direct = np.sum(gq[: N - M]) / N
        S_direct[j] = 2.0 ** (j * q * nu) * direct
        A[j] = direct ** (1.0 / q)
        if max_shifts:
            shifts = np.unique(np.linspace(1, M, min(M, max_shifts)).round().astype(int))
            best = direct
            for s in shifts[:-1]:
                best = max(best, np.sum(((_sup_increment(counts, s) * scale) ** q)[: N - s]) / N)
            S_shift[j] = 2.0 ** (j * q * nu) * best
    return DyadicProfile(
        A, float(q), variant="localtime_uniform", q=float(q), nu=float(nu),
        S=S, S_direct=S_direct, S_shift_sup=S_shift if max_shifts else None,
        meta={"sup_over": "histogram bins", "max_shifts": max_shifts, "dx": field.dx},
    )
