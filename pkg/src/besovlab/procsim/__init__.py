"""Sample-path generation for Bm, fBm, bifractional Bm and the stochastic heat equation."""

from ..errors import ValidationError
from .gaussian import (
    cholesky_factor,
    circulant_eigenvalues,
    cov_bifbm,
    covariance_function,
    fbm_circulant_array,
    gaussian_path_array,
    sample_fbm_circulant,
    sample_gaussian_paths,
)
from .io import read_path_csv, write_path_csv
from .moments import moment_increment_slope
from .rng import substream
from .she import solve_she, solve_she_batch
from .types import GridSpec, MomentEstimate, ProcessDescriptor, SamplePath, SheSpec

METHODS = ("auto", "exact", "circulant")


def simulate_array(descriptor: ProcessDescriptor, grid: GridSpec, seed: int, replicates, method: str = "auto"):
    """Dispatch to the right sampler; returns ``(array (R, n, d), meta)``.

    ``auto`` picks circulant embedding for processes with stationary
    increments, exact factorization for bifBm and the PDE solver for She.
    """
    if method not in METHODS:
        raise ValidationError(f"unknown sampling method {method!r}")
    if descriptor.kind == "She":
        return solve_she_batch(descriptor.she, grid, seed, replicates, descriptor.d)
    if method == "circulant" or (method == "auto" and descriptor.has_stationary_increments):
        if not descriptor.has_stationary_increments:
            raise ValidationError("circulant embedding needs stationary increments (Bm/Fbm)")
        return fbm_circulant_array(descriptor.H, grid, seed, replicates, descriptor.d)
    return gaussian_path_array(descriptor, grid, seed, replicates)


def simulate(descriptor, grid, seed, n_reps=1, first_replicate=0, method="auto"):
    reps = list(range(first_replicate, first_replicate + n_reps))
    arr, meta = simulate_array(descriptor, grid, seed, reps, method)
    times = grid.times()
    return [SamplePath(times, arr[i], seed, descriptor, replicate=r, meta=dict(meta)) for i, r in enumerate(reps)]


__all__ = [
    "GridSpec", "MomentEstimate", "ProcessDescriptor", "SamplePath", "SheSpec",
    "cholesky_factor", "circulant_eigenvalues", "cov_bifbm", "covariance_function",
    "fbm_circulant_array", "gaussian_path_array", "moment_increment_slope",
    "read_path_csv", "sample_fbm_circulant", "sample_gaussian_paths", "simulate",
    "simulate_array", "solve_she", "solve_she_batch", "substream", "write_path_csv",
]
