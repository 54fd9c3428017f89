"""Empirical-constant checks of local nondeterminism for Gaussian processes.

For a Gaussian process whose coordinates are independent copies of a scalar
process with covariance ``cov(s, t)``, the characteristic function of a
linear combination of increments is ``exp(-Var / 2)``. The checks below
search for the worst case of each inequality over sampled times and
frequencies; a constant that stabilizes as the sample set grows is the
numerical witness that the bound holds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import UnsupportedError, ValidationError
from .procsim.gaussian import covariance_function
from .procsim.types import ProcessDescriptor


def _cov(cov_fn) -> Callable:
    if isinstance(cov_fn, ProcessDescriptor):
        return covariance_function(cov_fn)
    if callable(cov_fn):
        return cov_fn
    raise UnsupportedError(f"expected a Gaussian descriptor or covariance callable, got {cov_fn!r}")


def increment_covariance(cov_fn, times) -> np.ndarray:
    """Covariance matrix of ``Y(t_j) - Y(t_{j-1})``, ``j = 1..m``, with ``t_0 = 0``."""
    cov = _cov(cov_fn)
    t = np.concatenate([[0.0], np.asarray(times, dtype=float)])
    C = cov(t[:, None], t[None, :])
    D = np.diff(np.eye(t.size), axis=0)
    return D @ C @ D.T


@dataclass(frozen=True)
class CharFnQuery:
    times: Any
    v: Any
    k: Any = None
    alpha: float = 0.5

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "v", v)
        if t.ndim != 1 or t.size < 2:
            raise ValidationError("need m >= 2 times")
        if np.any(np.diff(t) <= 0) or t[0] <= 0 or t[-1] > 1:
            raise ValidationError("times must be strictly increasing in (0, 1]")
        if v.shape[0] != t.size:
            raise ValidationError("v must have one row per time")
        if self.k is not None:
            k = np.asarray(self.k)
            k = k[:, None] if k.ndim == 1 else k
            if k.shape != v.shape or np.any(k < 0):
                raise ValidationError("k must be a non-negative array shaped like v")
            object.__setattr__(self, "k", k)
        if not 0 < self.alpha < 1:
            raise ValidationError("alpha must lie in (0, 1)")


def gaussian_charfn(query: CharFnQuery, cov_fn) -> float:
    """``|E exp(i sum_j <v_j, X_{t_j} - X_{t_{j-1}}>)| = exp(-Var/2)``."""
    S = increment_covariance(cov_fn, query.times)
    var = float(np.einsum("jl,jk,kl->", query.v, S, query.v))
    return math.exp(-0.5 * max(var, 0.0))


@dataclass(frozen=True)
class LndSampleSpec:
    """How to sample times and frequencies in the alpha-LND search.

    ``grid`` mode takes all ordered m-tuples from ``n_times`` equispaced
    points of ``(0, 1]`` and all combinations of ``n_freq`` log-spaced
    magnitudes (plus sign patterns) per frequency entry; ``random`` mode
    draws ``n_times`` time tuples and ``n_freq`` frequency vectors per tuple.
    """

    mode: str = "grid"
    n_times: int = 32
    n_freq: int = 48
    window: float = 0.5
    freq_range: tuple = (1e-2, 1e3)
    include_zero: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("grid", "random"):
            raise ValidationError(f"unknown sampling mode {self.mode!r}")
        if self.n_times < 2 or self.n_freq < 1:
            raise ValidationError("need n_times >= 2 and n_freq >= 1")
        lo, hi = self.freq_range
        if not 0 < lo < hi:
            raise ValidationError("freq_range must satisfy 0 < lo < hi")


@dataclass
class LndReport:
    c_empirical: float
    n_samples: int
    argmax: dict
    descriptor: dict = field(default_factory=dict)
    m: int = 2
    k: list = field(default_factory=list)
    alpha: float = 0.5

    def to_dict(self) -> dict:
        return {"descriptor": self.descriptor, "m": self.m, "k": self.k, "alpha": self.alpha,
                "c_empirical": self.c_empirical, "n_samples": self.n_samples, "argmax": self.argmax}


def _time_tuples(spec: LndSampleSpec, m: int, rng):
    if spec.mode == "grid":
        pts = np.arange(1, spec.n_times + 1) / spec.n_times
        for tup in itertools.combinations(pts, m):
            if tup[-1] - tup[0] < spec.window:
                yield np.array(tup)
    else:
        for _ in range(spec.n_times):
            while True:
                t1 = rng.uniform(0, 1)
                rest = np.sort(rng.uniform(t1, min(1.0, t1 + spec.window), m - 1))
                tup = np.concatenate([[t1], rest])
                if np.all(np.diff(tup) > 0) and tup[-1] - tup[0] < spec.window:
                    yield tup
                    break


def _frequency_set(spec: LndSampleSpec, shape, rng) -> np.ndarray:
    """Frequency samples of shape ``(n, m, d)``."""
    lo, hi = np.log10(spec.freq_range[0]), np.log10(spec.freq_range[1])
    n_entries = shape[0] * shape[1]
    if spec.mode == "grid":
        mags = np.logspace(lo, hi, spec.n_freq)
        combos = np.array(list(itertools.product(mags, repeat=n_entries)))
        # an overall sign flip leaves |charfn| unchanged, so fix the first sign
        signs = np.array([(1.0,) + s for s in itertools.product((1.0, -1.0), repeat=n_entries - 1)])
        v = (combos[:, None, :] * signs[None, :, :]).reshape(-1, n_entries)
    else:
        mags = 10.0 ** rng.uniform(lo, hi, (spec.n_freq, n_entries))
        v = mags * rng.choice((-1.0, 1.0), size=mags.shape)
    if spec.include_zero:
        v = np.vstack([np.zeros((1, n_entries)), v])
    return v.reshape(-1, shape[0], shape[1])


def alphalnd_constant(descriptor, m: int, k_matrix, alpha: float, sample_spec: LndSampleSpec | None = None) -> LndReport:
    """Max over samples of ``|charfn| * prod |v_{j,l}|^k_{j,l} (t_j - t_{j-1})^(alpha k_{j,l})``.

    Samples are visited in a fixed order, so a larger sample set (more times
    or frequencies drawn from the same stream) can only raise the result.
    """
    if isinstance(descriptor, ProcessDescriptor):
        if not descriptor.is_gaussian:
            raise UnsupportedError("alpha-LND search needs a closed-form characteristic function (Gaussian only)")
        d = descriptor.d
        desc_dict = descriptor.to_dict()
    else:
        d = 1
        desc_dict = {"kind": "custom"}
    spec = sample_spec or LndSampleSpec()
    k = np.asarray(k_matrix, dtype=float)
    if k.ndim == 1:
        k = np.repeat(k[:, None], d, axis=1)
    if k.shape != (m, d):
        raise ValidationError(f"k must have shape (m, d) = ({m}, {d}), got {k.shape}")
    if np.any(k < 0):
        raise ValidationError("k entries must be non-negative")
    if m < 2:
        raise ValidationError("m must be >= 2")
    if not 0 < alpha < 1:
        raise ValidationError("alpha must lie in (0, 1)")

    rng = np.random.default_rng(spec.seed)
    best, n_samples, arg = -1.0, 0, {}
    freq_rng = np.random.default_rng([spec.seed, 1])
    V = _frequency_set(spec, (m, d), freq_rng) if spec.mode == "grid" else None
    for times in _time_tuples(spec, m, rng):
        if V is None:
            Vt = _frequency_set(spec, (m, d), freq_rng)
        else:
            Vt = V
        S = increment_covariance(descriptor, times)
        var = np.einsum("njl,jk,nkl->n", Vt, S, Vt)
        dts = np.diff(np.concatenate([[0.0], times]))
        with np.errstate(divide="ignore", invalid="ignore"):
            logw = np.sum(k[None] * (np.log(np.abs(Vt)) + alpha * np.log(dts)[None, :, None]), axis=(1, 2))
        # 0^0 = 1 for zero exponents
        logw = np.where(np.isnan(logw), 0.0, logw)
        vals = np.exp(-0.5 * np.maximum(var, 0.0) + logw)
        i = int(np.argmax(vals))
        n_samples += vals.size
        if vals[i] > best:
            best = float(vals[i])
            arg = {"times": times.tolist(), "v": Vt[i].tolist()}
    if n_samples == 0:
        raise ValidationError("sample spec produced no admissible time tuples")
    return LndReport(best, n_samples, arg, desc_dict, m, k.tolist(), float(alpha))


def refine_lnd_constant(descriptor, m, k_matrix, alpha, specs, rel_tol: float = 0.01):
    """Run :func:`alphalnd_constant` over increasingly fine sample specs.

    Returns ``(reports, stable)`` where ``stable`` means the relative change
    stayed below ``rel_tol`` over the last two refinement rounds.
    """
    reports = [alphalnd_constant(descriptor, m, k_matrix, alpha, s) for s in specs]
    c = [r.c_empirical for r in reports]
    stable = len(c) >= 3 and all(abs(c[i] - c[i - 1]) <= rel_tol * abs(c[i]) for i in (-1, -2))
    return reports, stable


def berman_lnd_ratio(cov_fn, m: int, times, v) -> float:
    """``Var(sum_j v_j dY_j) / sum_j v_j^2 Var(dY_j)`` for a scalar Gaussian process."""
    times = np.asarray(times, dtype=float)
    v = np.asarray(v, dtype=float)
    if times.size != m or v.size != m:
        raise ValidationError("times and v must have length m")
    S = increment_covariance(cov_fn, times)
    den = float(np.sum(v * v * np.diag(S)))
    if den <= 0:
        raise ValidationError("zero denominator: v vanishes or increments are degenerate")
    return float(v @ S @ v) / den


def random_berman_queries(rng: np.random.Generator, m: int, n: int, window: float = 0.5):
    """Random ordered times ``t_1 < ... < t_m`` with ``t_m - t_1 < window`` and Gaussian ``v``."""
    out = []
    while len(out) < n:
        t1 = rng.uniform(0, 1)
        t = np.sort(np.concatenate([[t1], rng.uniform(t1, min(1.0, t1 + window), m - 1)]))
        if np.all(np.diff(t) > 0):
            out.append((t, rng.normal(size=m)))
    return out


def variance_bounds_check(cov_fn, alpha: float, grid) -> tuple[float, float]:
    """``(min, max)`` of ``Var(Y_t - Y_s) / (t - s)^(2 alpha)`` over all pairs ``s < t`` of ``grid``."""
    cov = _cov(cov_fn)
    g = np.unique(np.asarray(grid, dtype=float))
    if g.size < 2:
        raise ValidationError("need at least one pair s < t")
    i, j = np.triu_indices(g.size, k=1)
    s, t = g[i], g[j]
    var = cov(t, t) + cov(s, s) - 2.0 * cov(s, t)
    den = (t - s) ** (2 * alpha)
    # pairs so close that the scale underflows carry no information
    ok = den > 0
    if not np.any(ok):
        raise ValidationError("grid points too close to resolve any pair")
    ratio = var[ok] / den[ok]
    return float(ratio.min()), float(ratio.max())
