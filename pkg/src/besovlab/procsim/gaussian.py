"""Exact and circulant-embedding samplers for Bm, fBm and bifractional Bm."""

from __future__ import annotations

import numpy as np
from scipy.linalg import blas, lapack

from ..errors import NumericalError, UnsupportedError, ValidationError
from .rng import check_seed, substream
from .types import GridSpec, ProcessDescriptor, SamplePath

JITTER_LADDER = (0.0, 1e-14, 1e-12, 1e-10)
CIRCULANT_TOL = 1e-8
_BLOCK = 1024


def _check_hk(H, K):
    if not 0.0 < H < 1.0:
        raise ValidationError(f"H must lie in (0, 1), got {H}")
    if not 0.0 < K <= 1.0:
        raise ValidationError(f"K must lie in (0, 1], got {K}")


def cov_bifbm(H, K, s, t):
    """Covariance of bifractional Brownian motion.

    ``2**-K * ((t**2H + s**2H)**K - |t - s|**(2HK))``; K = 1 gives fBm and
    ``H = 1/2, K = 1`` gives ``min(s, t)``. Broadcasts over ``s`` and ``t``.
    """
    _check_hk(H, K)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise ValidationError("times must be non-negative")
    out = 2.0 ** (-K) * ((t ** (2 * H) + s ** (2 * H)) ** K - np.abs(t - s) ** (2 * H * K))
    return out if out.ndim else float(out)


def covariance_function(descriptor: ProcessDescriptor):
    """Return the scalar-coordinate covariance ``cov(s, t)`` of a Gaussian descriptor."""
    if not descriptor.is_gaussian:
        raise UnsupportedError(f"{descriptor.kind} has no closed-form covariance")
    H, K = descriptor.H, descriptor.K
    return lambda s, t: cov_bifbm(H, K, s, t)


def _fill_covariance(H, K, t):
    n = t.size
    # Fortran order so LAPACK factors in place without a copy
    C = np.empty((n, n), order="F")
    t2h = t ** (2 * H)
    for lo in range(0, n, _BLOCK):
        hi = min(lo + _BLOCK, n)
        tb = t[lo:hi, None]
        C[lo:hi, :] = 2.0 ** (-K) * ((t2h[lo:hi, None] + t2h[None, :]) ** K - np.abs(tb - t[None, :]) ** (2 * H * K))
    return C


def cholesky_factor(H, K, t):
    """Lower Cholesky factor of the bifBm covariance on times ``t`` (all > 0).

    Walks the diagonal jitter ladder until the factorization succeeds. The
    returned array holds garbage above the diagonal; use it only through
    triangular BLAS routines. Returns ``(factor, jitter)``.
    """
    t = np.asarray(t, dtype=float)
    for jitter in JITTER_LADDER:
        C = _fill_covariance(H, K, t)
        if jitter:
            C[np.diag_indices_from(C)] += jitter
        L, info = lapack.dpotrf(C, lower=1, clean=0, overwrite_a=1)
        if info == 0:
            return L, jitter
        del C, L
    raise NumericalError(
        f"covariance factorization failed on a grid of {t.size + 1} points "
        f"even with diagonal jitter {JITTER_LADDER[-1]:g}"
    )


def _standard_normals(seed, replicates, d, size):
    Z = np.empty((size, len(replicates) * d), order="F")
    for i, r in enumerate(replicates):
        for l in range(d):
            Z[:, i * d + l] = substream(seed, r, l).standard_normal(size)
    return Z


def gaussian_path_array(descriptor: ProcessDescriptor, grid: GridSpec, seed: int, replicates):
    """Exact samples as an array of shape ``(len(replicates), n_points, d)``.

    Each coordinate of each replicate uses its own sub-stream, so a replicate's
    values do not depend on which other replicates are drawn alongside it.
    """
    if not descriptor.is_gaussian:
        raise UnsupportedError(f"{descriptor.kind} is not a Gaussian descriptor")
    check_seed(seed)
    replicates = [int(r) for r in replicates]
    t = grid.times()[1:]
    L, jitter = cholesky_factor(descriptor.H, descriptor.K, t)
    Z = _standard_normals(seed, replicates, descriptor.d, t.size)
    X = blas.dtrmm(1.0, L, Z, lower=1)
    del L
    out = np.zeros((len(replicates), grid.n_points, descriptor.d))
    out[:, 1:, :] = X.T.reshape(len(replicates), descriptor.d, t.size).transpose(0, 2, 1)
    return out, {"method": "cholesky", "jitter": jitter, "fallback": False}


def sample_gaussian_paths(descriptor: ProcessDescriptor, grid: GridSpec, seed: int, n_reps: int = 1, first_replicate: int = 0):
    """Draw ``n_reps`` exact sample paths by covariance factorization."""
    if n_reps < 1:
        raise ValidationError("n_reps must be >= 1")
    reps = range(first_replicate, first_replicate + n_reps)
    arr, meta = gaussian_path_array(descriptor, grid, seed, reps)
    times = grid.times()
    return [
        SamplePath(times, arr[i], seed, descriptor, replicate=r, meta=dict(meta))
        for i, r in enumerate(reps)
    ]


def fgn_autocovariance(H, n, spacing=1.0):
    """Autocovariance of fBm increments over steps of size ``spacing``, lags 0..n-1."""
    k = np.arange(n, dtype=float)
    g = 0.5 * (np.abs(k + 1) ** (2 * H) - 2 * k ** (2 * H) + np.abs(k - 1) ** (2 * H))
    return g * spacing ** (2 * H)


def circulant_eigenvalues(H, n_incr, spacing=1.0):
    """Eigenvalues of the minimal circulant embedding of the increment covariance."""
    g = fgn_autocovariance(H, n_incr + 1, spacing)
    row = np.concatenate([g, g[-2:0:-1]])
    return np.fft.fft(row).real


def fbm_circulant_array(H: float, grid: GridSpec, seed: int, replicates, d: int = 1):
    """Circulant-embedding fBm samples, shape ``(len(replicates), n_points, d)``.

    Falls back to the exact sampler if the embedding has an eigenvalue below
    ``-CIRCULANT_TOL`` (relative to the largest one); ``meta['fallback']``
    records that.
    """
    _check_hk(H, 1.0)
    check_seed(seed)
    replicates = [int(r) for r in replicates]
    n_incr = grid.n_points - 1
    lam = circulant_eigenvalues(H, n_incr, grid.spacing)
    if lam.min() < -CIRCULANT_TOL * lam.max():
        arr, meta = gaussian_path_array(ProcessDescriptor("Fbm" if H != 0.5 else "Bm", d=d, H=H), grid, seed, replicates)
        meta = dict(meta, fallback=True, min_eigenvalue=float(lam.min()))
        return arr, meta
    m = lam.size
    scale = np.sqrt(np.clip(lam, 0.0, None) / m)
    out = np.zeros((len(replicates), grid.n_points, d))
    for i, r in enumerate(replicates):
        for l in range(d):
            z = substream(seed, r, l).standard_normal((2, m))
            y = np.fft.fft(scale * (z[0] + 1j * z[1]))
            out[i, 1:, l] = np.cumsum(y.real[:n_incr])
    return out, {"method": "circulant", "fallback": False, "min_eigenvalue": float(lam.min())}


def sample_fbm_circulant(H: float, grid: GridSpec, seed: int, replicate: int = 0, d: int = 1) -> SamplePath:
    """One fBm path via circulant embedding of the stationary increments."""
    arr, meta = fbm_circulant_array(H, grid, seed, [replicate], d)
    desc = ProcessDescriptor.bm(d) if H == 0.5 else ProcessDescriptor.fbm(H, d)
    return SamplePath(grid.times(), arr[0], seed, desc, replicate=replicate, meta=meta)
