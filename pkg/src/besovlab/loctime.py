"""Local times as occupation densities.

The histogram estimator counts, for each spatial bin, the grid samples
``phi(t_i)`` with ``t_i < t`` (left-endpoint rule), so the field is stored as
integer cumulative counts and

    L_hat(bin, t) = counts(bin, t) * dt / dx**d.

Mass conservation, monotonicity in ``t`` and additivity over time segments
then hold exactly. The truncated Fourier inversion ``L_N`` is an independent
route to the same density and is used as an oracle.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .errors import ResourceError, UnsupportedError, ValidationError

ESTIMATOR_VERSION = "histogram-left-endpoint/1"
MAX_BINS = 10**7
MAX_CELLS = 5 * 10**7


def _path_arrays(path, dt=None):
    """Return ``(values (n, d), dt, t0)`` from a SamplePath or a raw array."""
    if hasattr(path, "values") and hasattr(path, "times"):
        values = np.asarray(path.values, dtype=float)
        times = np.asarray(path.times, dtype=float)
        steps = np.diff(times)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise ValidationError("local times need a uniform time grid")
        return values, float(steps[0]), float(times[0])
    values = np.asarray(path, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    n = values.shape[0]
    if n < 2:
        raise ValidationError("path needs at least two samples")
    return values, float(dt if dt is not None else 1.0 / (n - 1)), 0.0


def default_bin_width(values: np.ndarray) -> float:
    """``(path range) * n**(-1/3)``; unit range is assumed for constant paths."""
    n = values.shape[0]
    rng = float(np.max(values.max(axis=0) - values.min(axis=0)))
    if rng <= 0:
        rng = 1.0
    return rng * n ** (-1.0 / 3.0)


@dataclass
class LocalTimeField:
    """Cumulative occupation counts on a bin lattice times a time grid.

    ``counts`` has shape ``(*n_bins, n_times)``; bin ``k`` along each axis
    covers ``[origin + (lo + k) dx, origin + (lo + k + 1) dx)``.
    """

    counts: np.ndarray
    lo: tuple
    dx: float
    dt: float
    t_grid: np.ndarray
    stride: int
    origin: float = 0.0
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.counts.ndim - 1

    @property
    def n_bins(self) -> tuple:
        return self.counts.shape[:-1]

    @property
    def scale(self) -> float:
        return self.dt / self.dx ** self.d

    @property
    def values(self) -> np.ndarray:
        return self.counts * self.scale

    def bin_edges(self) -> list:
        return [self.origin + (lo + np.arange(nb + 1)) * self.dx for lo, nb in zip(self.lo, self.n_bins)]

    def bin_centers(self) -> np.ndarray:
        """Centres of all bins as a ``(prod(n_bins), d)`` array in C order."""
        axes = [self.origin + (lo + np.arange(nb) + 0.5) * self.dx for lo, nb in zip(self.lo, self.n_bins)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def time_index(self, t: float) -> int:
        k = int(round((t - self.t_grid[0]) / (self.stride * self.dt)))
        if k < 0 or k >= self.t_grid.size or not math.isclose(self.t_grid[k], t, rel_tol=1e-9, abs_tol=1e-12):
            raise ValidationError(f"t = {t!r} is not on the field's time grid")
        return k

    def bin_index(self, x) -> tuple:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = tuple(int(math.floor((xi - self.origin) / self.dx)) - lo for xi, lo in zip(x, self.lo))
        return idx

    def value_at(self, x, t: float) -> float:
        """Density estimate at point ``x`` (0 outside the lattice) and grid time ``t``."""
        k = self.time_index(t)
        idx = self.bin_index(x)
        if any(i < 0 or i >= nb for i, nb in zip(idx, self.n_bins)):
            return 0.0
        return float(self.counts[idx + (k,)] * self.scale)

    def flat_counts(self) -> np.ndarray:
        return self.counts.reshape(-1, self.counts.shape[-1])

    def to_csv(self, path, time_stride: int = 1) -> tuple[Path, Path]:
        """Rows are bin centres, columns the (optionally thinned) time grid; JSON sidecar alongside."""
        path = Path(path)
        cols = np.arange(0, self.t_grid.size, time_stride)
        centers = self.bin_centers()
        vals = self.flat_counts()[:, cols] * self.scale
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{l + 1}" for l in range(self.d)] + [format(t, ".17g") for t in self.t_grid[cols]])
            for c, row in zip(centers, vals):
                w.writerow([format(v, ".17g") for v in c] + [format(v, ".17g") for v in row])
        meta_path = path.with_suffix(".json")
        meta = {"dx": self.dx, "dt": self.dt, "d": self.d, "n_bins": list(self.n_bins),
                "estimator_version": ESTIMATOR_VERSION, "time_stride": time_stride, **self.meta}
        meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True))
        return path, meta_path


def local_time_field(path, bin_width: float | None = None, *, dt: float | None = None,
                     time_level: int | None = None, like: LocalTimeField | None = None,
                     origin: float = 0.0, include_last: bool = False) -> LocalTimeField:
    """Histogram estimate of the local time of a path.

    ``path`` is a :class:`SamplePath` or an array of samples with step ``dt``.
    Bins are aligned to ``origin + k * bin_width`` and cover the path's range
    plus one margin bin on each side; ``like`` reuses another field's lattice.
    The time grid is every ``stride``-th sample time, with ``stride = (n-1) /
    2**time_level`` (default: every sample, thinned dyadically if the field
    would exceed the memory budget). ``include_last`` lets the final sample
    occupy ``[t_{n-1}, t_{n-1} + dt)`` as well, extending the grid by one step.
    """
    values, dt, t0 = _path_arrays(path, dt)
    n, d = values.shape
    if like is not None:
        dx, origin = like.dx, like.origin
        lo, nb = like.lo, like.n_bins
    else:
        dx = float(bin_width) if bin_width is not None else default_bin_width(values)
        if not (dx > 0 and math.isfinite(dx)):
            raise ValidationError(f"bin_width must be positive, got {bin_width}")
        kmin = np.floor((values.min(axis=0) - origin) / dx).astype(np.int64) - 1
        kmax = np.floor((values.max(axis=0) - origin) / dx).astype(np.int64) + 1
        lo = tuple(int(k) for k in kmin)
        nb = tuple(int(b) for b in kmax - kmin + 1)
    n_bins = int(np.prod([float(b) for b in nb]))
    if n_bins > MAX_BINS:
        raise ResourceError(f"{n_bins} bins exceed the limit of {MAX_BINS}; increase bin_width")

    n_int = n if include_last else n - 1
    if time_level is not None:
        if n_int % (2 ** time_level):
            raise ValidationError(f"2**time_level does not divide the {n_int} path intervals")
        stride = n_int >> time_level
    else:
        stride = 1
        while n_bins * (n_int // stride + 1) > MAX_CELLS and n_int % (2 * stride) == 0:
            stride *= 2
    n_t = n_int // stride + 1
    if n_bins * n_t > MAX_CELLS:
        raise ResourceError(f"field of {n_bins} bins x {n_t} times exceeds {MAX_CELLS} cells")

    idx = np.floor((values[:n_int] - origin) / dx).astype(np.int64) - np.asarray(lo, dtype=np.int64)
    if np.any(idx < 0) or np.any(idx >= np.asarray(nb)):
        raise ValidationError("path leaves the bin lattice of the reference field")
    flat = np.ravel_multi_index(tuple(idx.T), nb) if d > 1 else idx[:, 0]
    seg = np.arange(n_int) // stride + 1
    inc = np.bincount(flat * n_t + seg, minlength=n_bins * n_t).reshape(n_bins, n_t)
    counts = np.cumsum(inc, axis=1).reshape(tuple(nb) + (n_t,))
    t_grid = t0 + np.arange(n_t) * (stride * dt)
    meta = {"estimator_version": ESTIMATOR_VERSION, "sup_over": "histogram bins (lower bound of the true sup)"}
    return LocalTimeField(counts, tuple(lo), dx, dt, t_grid, stride, origin, meta)


# ---------------------------------------------------------------------------
# test functions for the occupation formula

def make_test_function(spec) -> Callable[[np.ndarray], np.ndarray]:
    """Built-in test functions acting on ``(m, d)`` arrays.

    ``"one"``, ``"coordinate"`` (first coordinate), ``("indicator", a, b)``
    (the box ``[a, b)^d``) and ``("gaussian_bump", centre, width)``.
    """
    if callable(spec):
        return spec
    name, *args = (spec,) if isinstance(spec, str) else tuple(spec)
    if name == "one":
        return lambda x: np.ones(x.shape[0])
    if name == "coordinate":
        l = int(args[0]) if args else 0
        return lambda x: x[:, l]
    if name == "indicator":
        a, b = args
        return lambda x: np.all((x >= a) & (x < b), axis=1).astype(float)
    if name == "gaussian_bump":
        c, w = args if args else (0.0, 1.0)
        return lambda x: np.exp(-np.sum((x - c) ** 2, axis=1) / (2.0 * w * w))
    raise ValidationError(f"unknown test function {spec!r}")


def occupation_residual(path, field: LocalTimeField, test_fn, t: float, *, dt: float | None = None) -> float:
    """``|sum_i dt f(phi(t_i)) - dx^d sum_bins f(centre) L_hat(bin, t)|`` over ``t_i < t``."""
    values, _, _ = _path_arrays(path, dt if dt is not None else field.dt)
    f = make_test_function(test_fn)
    k = field.time_index(t)
    n_used = k * field.stride
    lhs = field.dt * float(np.sum(f(values[:n_used])))
    rhs = field.dt * float(np.dot(f(field.bin_centers()), field.flat_counts()[:, k]))
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# Fourier inversion

@dataclass(frozen=True)
class FourierLtQuery:
    N: float
    x: Any
    t: float

    def __post_init__(self):
        if not (self.N >= 0 and math.isfinite(self.N)):
            raise ValidationError(f"truncation N must be finite and >= 0, got {self.N}")


def _trapezoid_weights(m: int, h: float) -> np.ndarray:
    w = np.full(m, h)
    if m > 1:
        w[0] = w[-1] = h / 2
    else:
        w[0] = 0.0
    return w


def fourier_local_time(path, query: FourierLtQuery, *, dt: float | None = None, chunk: int = 64) -> float:
    """Truncated Fourier inversion ``L_N(x, t)``.

    ``(2 pi)^-d * int_{[-N, N]^d} e^{-i<u, x>} int_0^t e^{i<u, X_s>} ds du``
    with trapezoid rules in both ``s`` (path grid) and ``u`` (step at most
    ``pi / (4 R)``, ``R`` bounding both the path range and ``|X_s - x|``).
    Returns the real part.
    """
    values, dt, t0 = _path_arrays(path, dt)
    n, d = values.shape
    if d > 2:
        raise UnsupportedError(f"Fourier local time is limited to d <= 2, got d = {d}")
    if query.N == 0:
        return 0.0
    x = np.broadcast_to(np.asarray(query.x, dtype=float), (d,))
    k = int(round((query.t - t0) / dt))
    if k < 0 or k >= n or not math.isclose(t0 + k * dt, query.t, rel_tol=1e-9, abs_tol=1e-12):
        raise ValidationError(f"t = {query.t!r} is not on the path grid")
    if k == 0:
        return 0.0
    Y = values[: k + 1] - x
    span = max(float(np.max(values.max(axis=0) - values.min(axis=0))), float(np.max(np.abs(Y))), 1e-12)
    step = math.pi / (4.0 * span)
    m = int(math.ceil(2 * query.N / step)) + 1
    u = np.linspace(-query.N, query.N, m)
    wu = _trapezoid_weights(m, u[1] - u[0])
    wt = _trapezoid_weights(k + 1, dt)

    if d == 1:
        grid_u = u[:, None]
        weights = wu
    else:
        U1, U2 = np.meshgrid(u, u, indexing="ij")
        grid_u = np.stack([U1.ravel(), U2.ravel()], axis=1)
        weights = np.outer(wu, wu).ravel()
    total = 0.0
    for lo in range(0, grid_u.shape[0], chunk):
        ub = grid_u[lo:lo + chunk]
        phase = ub @ Y.T
        inner = np.cos(phase) @ wt  # imaginary part integrates to ~0 and is discarded
        total += float(np.dot(weights[lo:lo + chunk], inner))
    return total / (2 * math.pi) ** d


@dataclass
class CrossCheck:
    discrepancy: float
    probes: np.ndarray
    histogram: np.ndarray
    fourier: np.ndarray
    atomic: bool


def localtime_cross_check(path, bin_width: float | None = None, N: float = 300.0, n_probe: int = 3,
                          probes=None, *, dt: float | None = None) -> CrossCheck:
    """Histogram vs Fourier local time at ``t = t_max`` on probe points.

    Probes default to ``n_probe`` evenly spaced interior points of the
    occupied range. A path with zero range has an atomic occupation measure;
    that is flagged through ``atomic`` rather than raised.
    """
    values, dt, _ = _path_arrays(path, dt)
    if values.shape[1] != 1:
        raise UnsupportedError("cross-check is implemented for d = 1")
    if probes is None:
        if n_probe < 3:
            raise ValidationError("need at least 3 probe points")
        a, b = float(values.min()), float(values.max())
        probes = a + (b - a) * np.arange(1, n_probe + 1) / (n_probe + 1)
    probes = np.atleast_1d(np.asarray(probes, dtype=float))
    fld = local_time_field(values, bin_width, dt=dt)
    t_end = float(fld.t_grid[-1])
    hist = np.array([fld.value_at(p, t_end) for p in probes])
    four = np.array([fourier_local_time(values, FourierLtQuery(N, p, t_end), dt=dt) for p in probes])
    atomic = bool(np.ptp(values) < 1e-12)
    return CrossCheck(float(np.max(np.abs(hist - four))), probes, hist, four, atomic)
