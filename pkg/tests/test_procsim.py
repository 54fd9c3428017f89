import json

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from besovlab.errors import NumericalError, TheoremPreconditionError, UnsupportedError, ValidationError
from besovlab.procsim import (
    GridSpec, ProcessDescriptor, SheSpec, cholesky_factor, circulant_eigenvalues, cov_bifbm,
    covariance_function, fbm_circulant_array, gaussian_path_array, moment_increment_slope,
    read_path_csv, sample_fbm_circulant, sample_gaussian_paths, simulate, solve_she, write_path_csv,
)
from besovlab.procsim.she import CFL, solve_she_batch, stability_substeps

# ---------------------------------------------------------------------------
# GridSpec / descriptors


def test_grid_spacing_and_times():
    g = GridSpec(17, t_max=2.0)
    assert g.J == 4
    assert g.spacing == 0.125
    t = g.times()
    assert t[0] == 0.0 and t[-1] == 2.0 and np.all(np.diff(t) > 0)


@pytest.mark.parametrize("n", [0, 5, 8, 10, 16, 18])
def test_grid_rejects_non_dyadic(n):
    with pytest.raises(ValidationError):
        GridSpec(n)


def test_grid_rejects_small_and_nonpositive_horizon():
    with pytest.raises(ValidationError):
        GridSpec(5)  # J = 2 < 3
    with pytest.raises(ValidationError):
        GridSpec(9, t_max=0.0)


def test_descriptor_alpha():
    assert ProcessDescriptor.bm().alpha == 0.5
    assert ProcessDescriptor.fbm(0.3).alpha == 0.3
    assert ProcessDescriptor.bifbm(0.6, 0.5).alpha == pytest.approx(0.3)
    assert ProcessDescriptor.she_process().alpha == 0.25


@pytest.mark.parametrize("kw", [dict(kind="Fbm", H=1.0), dict(kind="Fbm", H=0.0), dict(kind="BifBm", H=0.5, K=0.0),
                                dict(kind="BifBm", H=0.5, K=1.5), dict(kind="Bm", d=4), dict(kind="Xyz")])
def test_descriptor_validation(kw):
    with pytest.raises(ValidationError):
        ProcessDescriptor(**kw)


def test_local_time_regime():
    ProcessDescriptor.fbm(0.4, d=2).require_local_time_regime()
    with pytest.raises(TheoremPreconditionError):
        ProcessDescriptor.fbm(0.4, d=3).require_local_time_regime()
    with pytest.raises(TheoremPreconditionError):
        ProcessDescriptor.bm(d=2).require_local_time_regime()


def test_descriptor_dict_roundtrip():
    for desc in (ProcessDescriptor.bm(2), ProcessDescriptor.fbm(0.7), ProcessDescriptor.bifbm(0.6, 0.5, 3),
                 ProcessDescriptor.she_process(SheSpec(sigma="tanh", b="tanh", nx=32), 2)):
        assert ProcessDescriptor.from_dict(json.loads(json.dumps(desc.to_dict()))) == desc


def test_she_spec_validation():
    with pytest.raises(ValidationError):
        SheSpec(nx=8)
    with pytest.raises(ValidationError):
        SheSpec(x_probe=1.0)
    with pytest.raises(ValidationError):
        SheSpec(sigma="scaled-identity", rho=0.0)
    with pytest.raises(ValidationError):
        SheSpec(sigma="bogus")
    SheSpec(sigma="scaled-identity", rho=0.0, allow_degenerate=True)


# ---------------------------------------------------------------------------
# covariance


@pytest.mark.parametrize("H,K,s,t,expected", [
    (0.5, 1.0, 0.5, 1.0, 0.5),
    (0.6, 0.5, 0.0, 1.0, 0.0),
    (0.6, 0.5, 1.0, 1.0, 1.0),
])
def test_cov_bifbm_examples(H, K, s, t, expected):
    assert cov_bifbm(H, K, s, t) == pytest.approx(expected, abs=1e-15)


def test_cov_bifbm_high_precision_oracle():
    mpmath.mp.dps = 40
    H, K, s, t = mpmath.mpf("0.75"), 1, mpmath.mpf("0.25"), mpmath.mpf(1)
    oracle = mpmath.mpf(2) ** (-K) * ((t ** (2 * H) + s ** (2 * H)) ** K - abs(t - s) ** (2 * H * K))
    assert float(oracle) == pytest.approx(0.2377405, abs=5e-8)
    assert cov_bifbm(0.75, 1.0, 0.25, 1.0) == pytest.approx(float(oracle), rel=1e-14)


@pytest.mark.parametrize("H,K", [(0.0, 1.0), (1.0, 1.0), (0.5, 0.0), (0.5, 1.1)])
def test_cov_bifbm_rejects_parameters(H, K):
    with pytest.raises(ValidationError):
        cov_bifbm(H, K, 0.5, 1.0)


def test_cov_bifbm_rejects_negative_time():
    with pytest.raises(ValidationError):
        cov_bifbm(0.5, 1.0, -0.1, 1.0)


@settings(max_examples=200, deadline=None)
@given(H=st.floats(0.05, 0.95), K=st.floats(0.05, 1.0), s=st.floats(0, 5), t=st.floats(0, 5))
def test_cov_bifbm_symmetry_and_diagonal(H, K, s, t):
    assert cov_bifbm(H, K, s, t) == pytest.approx(cov_bifbm(H, K, t, s), rel=1e-12, abs=1e-15)
    assert cov_bifbm(H, K, t, t) == pytest.approx(t ** (2 * H * K), rel=1e-12, abs=1e-15)


def test_covariance_function_rejects_she():
    with pytest.raises(UnsupportedError):
        covariance_function(ProcessDescriptor.she_process())


def test_cholesky_factor_reconstructs():
    t = GridSpec(33).times()[1:]
    L, jitter = cholesky_factor(0.6, 0.5, t)
    C = cov_bifbm(0.6, 0.5, t[:, None], t[None, :])
    assert np.allclose(np.tril(L) @ np.tril(L).T, C + jitter * np.eye(t.size), atol=1e-12)
    assert jitter <= 1e-10


def test_cholesky_factor_failure_reports_size():
    # a repeated time makes the matrix exactly singular beyond any jitter of the ladder
    t = np.array([0.5, 0.5, 0.5, 1.0]) * 1e6
    with pytest.raises(NumericalError, match="grid of 5 points"):
        cholesky_factor(0.9, 1.0, t)


# ---------------------------------------------------------------------------
# exact Gaussian sampling


def test_bm_variance_at_one():
    # grid {0, ..., 1} with 9 points; X(1) over 10^5 replicates
    arr, _ = gaussian_path_array(ProcessDescriptor.bm(), GridSpec(9), 123, range(100_000))
    assert np.var(arr[:, -1, 0]) == pytest.approx(1.0, abs=0.02)


@pytest.mark.parametrize("desc", [ProcessDescriptor.bm(2), ProcessDescriptor.fbm(0.3), ProcessDescriptor.bifbm(0.6, 0.5, 3)])
def test_gaussian_paths_start_at_zero_and_are_deterministic(desc):
    g = GridSpec(65)
    a = sample_gaussian_paths(desc, g, 99, n_reps=3)
    b = sample_gaussian_paths(desc, g, 99, n_reps=3)
    for pa, pb in zip(a, b):
        assert np.all(pa.values[0] == 0.0)
        assert np.array_equal(pa.values, pb.values)
        assert pa.values.shape == (65, desc.d)


def test_gaussian_replicates_do_not_depend_on_batch():
    g = GridSpec(33)
    desc = ProcessDescriptor.bifbm(0.6, 0.5, 2)
    batch = sample_gaussian_paths(desc, g, 5, n_reps=4)
    single = sample_gaussian_paths(desc, g, 5, n_reps=1, first_replicate=2)[0]
    assert np.array_equal(batch[2].values, single.values)


def test_gaussian_coordinates_independent_streams():
    p = sample_gaussian_paths(ProcessDescriptor.bm(2), GridSpec(33), 5)[0]
    assert not np.array_equal(p.values[:, 0], p.values[:, 1])


def test_empirical_covariance_matches_bifbm():
    M = 10_000
    g = GridSpec(17)
    arr, _ = gaussian_path_array(ProcessDescriptor.bifbm(0.6, 0.5), g, 2024, range(M))
    X = arr[:, :, 0]
    emp = X.T @ X / M  # centred law
    t = g.times()
    C = cov_bifbm(0.6, 0.5, t[:, None], t[None, :])
    assert np.max(np.abs(emp - C)) <= 6 / np.sqrt(M)


def test_sample_gaussian_rejects_she():
    with pytest.raises(UnsupportedError):
        sample_gaussian_paths(ProcessDescriptor.she_process(), GridSpec(9), 0)


# ---------------------------------------------------------------------------
# circulant embedding


def test_circulant_bm_lag1_correlation():
    arr, meta = fbm_circulant_array(0.5, GridSpec(2**17 + 1), 8, [0])
    inc = np.diff(arr[0, :, 0])[:100_000]
    r = np.corrcoef(inc[:-1], inc[1:])[0, 1]
    assert abs(r) <= 3 / np.sqrt(inc.size)
    assert meta["method"] == "circulant" and meta["fallback"] is False


def test_circulant_bm_variance():
    arr, _ = fbm_circulant_array(0.5, GridSpec(9), 77, range(100_000))
    assert np.var(arr[:, -1, 0]) == pytest.approx(1.0, abs=0.02)


def test_circulant_deterministic_and_zero_start():
    a = sample_fbm_circulant(0.7, GridSpec(257), 3, replicate=2, d=2)
    b = sample_fbm_circulant(0.7, GridSpec(257), 3, replicate=2, d=2)
    assert np.array_equal(a.values, b.values)
    assert np.all(a.values[0] == 0.0)


@pytest.mark.parametrize("H", [0.05, 0.3, 0.5, 0.7, 0.95])
def test_circulant_eigenvalues_nonnegative(H):
    lam = circulant_eigenvalues(H, 1024)
    assert lam.min() >= -1e-8 * lam.max()


@pytest.mark.parametrize("H", [0.3, 0.7])
def test_circulant_and_exact_increment_variances_agree(H):
    g = GridSpec(33)
    M = 4000
    a, _ = fbm_circulant_array(H, g, 1, range(M))
    b, _ = gaussian_path_array(ProcessDescriptor.fbm(H), g, 2, range(M))
    for lag in (1, 2, 4, 8, 16):
        ia = (a[:, lag:, 0] - a[:, :-lag, 0]).ravel()
        ib = (b[:, lag:, 0] - b[:, :-lag, 0]).ravel()
        # per-replicate means of squared increments are iid across replicates
        sa = (a[:, lag:, 0] - a[:, :-lag, 0]) ** 2
        sb = (b[:, lag:, 0] - b[:, :-lag, 0]) ** 2
        se = np.sqrt(sa.mean(axis=1).var() / M + sb.mean(axis=1).var() / M)
        assert abs(np.mean(ia ** 2) - np.mean(ib ** 2)) <= 3 * se


def test_simulate_dispatch():
    g = GridSpec(33)
    assert simulate(ProcessDescriptor.fbm(0.4), g, 1)[0].meta["method"] == "circulant"
    assert simulate(ProcessDescriptor.bifbm(0.4, 0.5), g, 1)[0].meta["method"] == "cholesky"
    assert simulate(ProcessDescriptor.fbm(0.4), g, 1, method="exact")[0].meta["method"] == "cholesky"
    with pytest.raises(ValidationError):
        simulate(ProcessDescriptor.bifbm(0.4, 0.5), g, 1, method="circulant")


# ---------------------------------------------------------------------------
# stochastic heat equation


def _green_variance(t, x, n_terms=200_000):
    n = np.arange(1, n_terms + 1)
    lam = (n * np.pi) ** 2
    return t + np.sum(np.cos(n * np.pi * x) ** 2 * (1 - np.exp(-2 * lam * t)) / lam)


def _scheme_variance(nx, dt, n_steps, ip):
    """Exact variance of the Euler scheme at cell ``ip`` after ``n_steps`` steps."""
    dx = 1.0 / nx
    L = np.diag(-2.0 * np.ones(nx)) + np.diag(np.ones(nx - 1), 1) + np.diag(np.ones(nx - 1), -1)
    L[0, 0] = L[-1, -1] = -1.0
    lam, V = np.linalg.eigh(np.eye(nx) + dt / dx ** 2 * L)
    geo = np.where(np.abs(lam) < 1, (1 - lam ** (2 * n_steps)) / (1 - lam ** 2), n_steps)
    return dt / dx * float(np.sum(V[ip] ** 2 * geo))


def test_she_scheme_variance_matches_green_series():
    spec = SheSpec(nx=128, x_probe=0.5)
    grid = GridSpec(9, t_max=0.05)
    n_sub = stability_substeps(grid, spec.nx)
    dt = grid.spacing / n_sub
    assert dt <= (1.0 / spec.nx) ** 2 / 2
    ip = int(0.5 * 128)
    x = (ip + 0.5) / 128
    exact = _scheme_variance(128, dt, n_sub * 8, ip)
    green = _green_variance(0.05, x)
    assert abs(exact / green - 1) <= 0.05


def test_she_monte_carlo_matches_scheme_variance():
    spec = SheSpec(nx=128, x_probe=0.5)
    grid = GridSpec(9, t_max=0.05)
    R = 1000
    arr, meta = solve_she_batch(spec, grid, 31, range(R))
    ip = int(0.5 * 128)
    for k in (2, 4, 8):
        v_mc = arr[:, k, 0].var()
        v = _scheme_variance(128, meta["dt"], meta["substeps"] * k, ip)
        assert abs(v_mc - v) <= 4 * v * np.sqrt(2 / R)
    # variance grows in t
    v_t = arr[:, 1:, 0].var(axis=0)
    assert np.all(np.diff(v_t) > 0)
    mc_end = arr[:, -1, 0].var()
    assert abs(mc_end / _green_variance(0.05, meta["x_probe_cell"]) - 1) <= 0.05 + 4 * np.sqrt(2 / R)


def test_she_zero_sigma_gives_zero():
    spec = SheSpec(sigma="scaled-identity", rho=0.0, allow_degenerate=True, nx=16)
    path = solve_she(spec, GridSpec(17, t_max=0.01), 4)
    assert np.all(path.values == 0.0)


def test_she_initial_condition_and_determinism():
    spec = SheSpec(sigma="tanh", b="tanh", nx=32)
    a = solve_she(spec, GridSpec(33, t_max=0.05), 11, d=2, replicate=1)
    b = solve_she(spec, GridSpec(33, t_max=0.05), 11, d=2, replicate=1)
    assert np.all(a.values[0] == 0.0)
    assert np.array_equal(a.values, b.values)
    assert a.values.shape == (33, 2)
    assert a.meta["dt"] <= CFL * (1 / 32) ** 2 + 1e-18


def test_she_batch_independent_of_composition():
    spec = SheSpec(nx=16)
    g = GridSpec(9, t_max=0.01)
    arr, _ = solve_she_batch(spec, g, 9, [0, 1, 2])
    one, _ = solve_she_batch(spec, g, 9, [2])
    assert np.array_equal(arr[2], one[0])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_she_blowup_raises_numerical_error(monkeypatch):
    from besovlab.procsim import she

    monkeypatch.setattr(she, "CFL", 5.0)  # far beyond the stability limit
    with pytest.raises(NumericalError, match="step"):
        she.solve_she(SheSpec(nx=64), GridSpec(9, t_max=1.0), 1)


# ---------------------------------------------------------------------------
# moments


def test_moment_slope_bm():
    paths = simulate(ProcessDescriptor.bm(), GridSpec(1025), 5, n_reps=32)
    h = paths[0].spacing
    est = moment_increment_slope(paths, 2.0, [h, 2 * h, 4 * h, 8 * h, 16 * h])
    assert est.slope == pytest.approx(1.0, abs=0.05)
    assert est.K_hat == pytest.approx(1.0, rel=0.2)


def test_moment_slope_fbm_03():
    paths = simulate(ProcessDescriptor.fbm(0.3), GridSpec(1025), 6, n_reps=32)
    h = paths[0].spacing
    est = moment_increment_slope(paths, 2.0, [h, 2 * h, 4 * h, 8 * h, 16 * h])
    assert est.slope == pytest.approx(0.6, abs=0.05)


def test_moment_slope_needs_four_lags():
    paths = simulate(ProcessDescriptor.bm(), GridSpec(65), 5)
    h = paths[0].spacing
    with pytest.raises(ValidationError):
        moment_increment_slope(paths, 2.0, [h, 2 * h, 4 * h])
    with pytest.raises(ValidationError):
        moment_increment_slope(paths, 2.0, [h, 2 * h, 4 * h, 4 * h])
    with pytest.raises(ValidationError):
        moment_increment_slope(paths, 2.0, [h, 1.5 * h, 4 * h, 8 * h])


# ---------------------------------------------------------------------------
# CSV


def test_path_csv_roundtrip(tmp_path):
    p = simulate(ProcessDescriptor.bifbm(0.6, 0.5, 2), GridSpec(33), 17, n_reps=2)[1]
    csv_path, meta_path = write_path_csv(p, tmp_path / "p.csv")
    header = csv_path.read_text().splitlines()[0]
    assert header == "t,x1,x2"
    meta = json.loads(meta_path.read_text())
    assert meta["seed"] == 17 and meta["replicate"] == 1 and "fallback" in meta
    q = read_path_csv(csv_path)
    assert np.array_equal(q.values, p.values)
    assert np.array_equal(q.times, p.times)
    assert q.descriptor == p.descriptor
