"""Moduli of continuity and dyadic Besov seminorms of sampled functions.

Samples are taken on a uniform grid of ``[0, 1]`` (a path on ``[0, t_max]``
is rescaled to unit time). Discrete ``L^p`` norms over ``I(h) = [0, 1 - h]``
use the left rectangle rule: with ``N`` grid intervals and a shift of ``s``
steps, ``||f(. + h) - f||_p^p = (1/N) * sum_{i < N - s} |f_{i+s} - f_i|^p``.
This makes ``f(x) = x`` give ``A_j = 2^-j (1 - 2^-j)^(1/p)`` exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np

from ..errors import ValidationError


def as_samples(f) -> np.ndarray:
    """Return samples as an ``(n, d)`` float array."""
    arr = np.asarray(getattr(f, "values", f), dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 2:
        raise ValidationError("need at least two samples of a scalar or vector function")
    return arr


def _check_p(p):
    if not (p >= 1 and math.isfinite(p)):
        raise ValidationError(f"p must lie in [1, inf), got {p}")


def shifted_lp_norm(f: np.ndarray, s: int, p: float) -> float:
    """Discrete L^p norm of ``x -> f(x + s/N) - f(x)`` over ``I(s/N)``."""
    N = f.shape[0] - 1
    if s >= N:
        return 0.0
    if s == 0:
        return 0.0
    inc = f[s:] - f[:-s]
    inc = inc[: N - s]  # left endpoints x_i < 1 - h
    mag = np.abs(inc[:, 0]) if inc.shape[1] == 1 else np.linalg.norm(inc, axis=1)
    return float((np.sum(mag ** p) / N) ** (1.0 / p))


def modulus_lp(f_samples, p: float, t: float) -> float:
    """``omega_p(f, t)``: sup over grid shifts ``|h| <= t`` of the L^p increment norm."""
    _check_p(p)
    if t < 0:
        raise ValidationError(f"t must be non-negative, got {t}")
    f = as_samples(f_samples)
    N = f.shape[0] - 1
    s_max = min(N, int(math.floor(t * N + 1e-9)))
    best = 0.0
    for s in range(1, s_max + 1):
        best = max(best, shifted_lp_norm(f, s, p))
    return best


@dataclass
class DyadicProfile:
    """Per-level dyadic increment norms ``A_j``, ``j = 0..J_max``.

    For the ``localtime_uniform`` variant ``A_j`` is the L^q norm of
    ``r -> sup_x |L(x, r + 2^-j) - L(x, r)|`` and ``S``/``S_direct``/
    ``S_shift_sup`` hold the level statistics at smoothness ``nu``.
    """

    A: np.ndarray
    p: float
    variant: str = "path"
    q: float | None = None
    nu: float | None = None
    S: np.ndarray | None = None
    S_direct: np.ndarray | None = None
    S_shift_sup: np.ndarray | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        if self.A.ndim != 1:
            raise ValidationError("A must be one-dimensional")
        if np.any(self.A < 0) or not np.all(np.isfinite(self.A)):
            raise ValidationError("A_j must be finite and non-negative")
        if self.variant not in ("path", "localtime_uniform"):
            raise ValidationError(f"unknown profile variant {self.variant!r}")

    @classmethod
    def from_values(cls, A, p: float = 1.0, **kw) -> "DyadicProfile":
        return cls(np.asarray(A, dtype=float), p, **kw)

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.A.size)

    @property
    def J_max(self) -> int:
        return self.A.size - 1

    def statistic(self, nu: float) -> np.ndarray:
        """Level statistic whose growth decides membership: ``2^(j nu) A_j``,
        or ``S_j = 2^(j q nu) A_j^q`` for local-time profiles."""
        j = self.levels
        if self.variant == "localtime_uniform":
            return 2.0 ** (j * self.q * nu) * self.A ** self.q
        return 2.0 ** (j * nu) * self.A

    def rows(self):
        for j, a in enumerate(self.A):
            row = {"j": int(j), "A_j": float(a)}
            if self.S is not None:
                row["S_j"] = float(self.S[j])
            yield row

    def to_csv(self, path) -> Path:
        path = Path(path)
        cols = ["j", "A_j"] + (["S_j"] if self.S is not None else [])
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for row in self.rows():
                w.writerow([row["j"]] + [format(row[c], ".17g") for c in cols[1:]])
        return path


def dyadic_profile(f_samples, p: float, J_max: int | None = None) -> DyadicProfile:
    """``A_j = ||x -> f(x + 2^-j) - f(x)||_{L^p(I(2^-j))}`` for ``j = 0..J_max``.

    ``2**J_max`` must divide the number of grid intervals so that every shift
    lands on a grid point. Default ``J_max`` is ``log2(N) - 2``.
    """
    _check_p(p)
    f = as_samples(f_samples)
    N = f.shape[0] - 1
    if J_max is None:
        if N & (N - 1):
            raise ValidationError("default J_max needs a 2^J + 1 point grid")
        J_max = max(0, N.bit_length() - 3)
    if int(J_max) != J_max or J_max < 0:
        raise ValidationError(f"J_max must be a non-negative integer, got {J_max}")
    J_max = int(J_max)
    if N % (2 ** J_max):
        raise ValidationError(f"2**J_max = {2 ** J_max} does not divide the {N} grid intervals")
    A = [shifted_lp_norm(f, N >> j, p) for j in range(J_max + 1)]
    return DyadicProfile(np.array(A), float(p), meta={"n_points": N + 1})


def seminorm_from_profile(profile: DyadicProfile, nu: float) -> float:
    """``sup_j 2^(j nu) A_j`` over the stored levels."""
    if profile.A.size == 0:
        raise ValidationError("empty profile")
    j = profile.levels
    return float(np.max(2.0 ** (j * nu) * profile.A))


class PqNorm(NamedTuple):
    value: float
    truncation_level: int


def besov_pq_norm(profile: DyadicProfile, nu: float, q: float) -> PqNorm:
    """``(sum_j 2^(j q nu) A_j^q)^(1/q)`` truncated at the profile's ``J_max``."""
    if not (q >= 1 and math.isfinite(q)):
        raise ValidationError(f"q must lie in [1, inf), got {q}")
    if profile.A.size == 0:
        raise ValidationError("empty profile")
    j = profile.levels
    total = np.sum(2.0 ** (j * q * nu) * profile.A ** q)
    return PqNorm(float(total ** (1.0 / q)), profile.J_max)
