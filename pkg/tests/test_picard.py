import numpy as np
import pytest

from stefansim.boundary import exp_imbalance, zero_boundary
from stefansim.grids import Field, build_grid
from stefansim.noise import NoiseField, sample_white_noise
from stefansim.picard import build_kernel_tables, mild_solve_w, picard_iterate
from stefansim.spde import ModelCoefficients, constant_coefficients, run_relative_frame


@pytest.fixture(scope="module")
def small_grid():
    return build_grid("compact", 32, 0.02, 512)


@pytest.fixture(scope="module")
def small_tables(small_grid):
    return build_kernel_tables(small_grid)


def _zero_noise(grid):
    return NoiseField(grid=grid, seed=0, stream=0,
                      xi=np.zeros((grid.nt, grid.n_nodes)))


def _const_field(grid, profile):
    return Field(grid, np.tile(profile, (grid.nt + 1, 1)))


def test_kernel_mass_bounded(small_grid, small_tables):
    # value-matrix rows integrate the kernel: mass <= 1 always, ~1 in the
    # interior at short lags (boundary absorption eats mass at long ones)
    for d in (0, 1, small_grid.nt - 1):
        rows = small_tables.mid_val[d].sum(axis=1)
        assert rows.max() <= 1.0 + 1e-9
    assert small_tables.mid_val[0].sum(axis=1)[small_grid.nx // 2] >= 0.999


def test_mild_zero_everything_is_zero(small_grid, small_tables):
    z = np.zeros(small_grid.n_nodes)
    coeffs = constant_coefficients(f=0.0, sigma=0.0)
    w = mild_solve_w(_const_field(small_grid, z), _const_field(small_grid, z),
                     coeffs, zero_boundary(), np.inf, _zero_noise(small_grid),
                     small_grid, side=1, tables=small_tables)
    assert np.max(np.abs(w.values)) == 0.0


def test_mild_initial_data_eigenfunction(small_grid, small_tables):
    v0 = np.sin(np.pi * small_grid.space_nodes())
    v0[0] = v0[-1] = 0.0
    coeffs = constant_coefficients(f=0.0, sigma=0.0)
    w = mild_solve_w(_const_field(small_grid, v0), _const_field(small_grid, 0 * v0),
                     coeffs, zero_boundary(), np.inf, _zero_noise(small_grid),
                     small_grid, side=1, tables=small_tables)
    t = small_grid.time_nodes()[:, None]
    expected = np.exp(-np.pi**2 * t) * v0[None, :]
    assert np.max(np.abs(w.values - expected)) <= 1e-3


def test_mild_constant_forcing_matches_direct(small_grid, small_tables):
    z = np.zeros(small_grid.n_nodes)
    coeffs = constant_coefficients(f=1.0, sigma=0.0)
    w = mild_solve_w(_const_field(small_grid, z), _const_field(small_grid, z),
                     coeffs, zero_boundary(), np.inf, _zero_noise(small_grid),
                     small_grid, side=1, tables=small_tables)
    traj = run_relative_frame((z, z.copy(), 0.0), coeffs, zero_boundary(),
                              np.inf, np.inf, small_grid, seed=0, store_stride=1)
    assert np.max(np.abs(w.values - traj.v1_snapshots)) <= 2e-3


def test_trivial_fixed_point_converges_immediately(small_grid, small_tables):
    z = np.zeros(small_grid.n_nodes)
    coeffs = constant_coefficients(f=0.0, sigma=0.0)
    noise = (_zero_noise(small_grid), _zero_noise(small_grid))
    rep = picard_iterate(z, z.copy(), coeffs, zero_boundary(), np.inf, noise,
                         small_grid, n_iters=2, tables=small_tables)
    assert rep.d[0] == 0.0
    assert rep.converged


def test_picard_contracts_and_matches_direct(small_grid, small_tables):
    x = small_grid.space_nodes()

    def drift(xv, u):
        return 0.5 - 0.5 * u

    def vol(xv, u):
        return 0.2 + 0.1 * u / (1.0 + np.abs(u))

    coeffs = ModelCoefficients(f1=drift, f2=drift, sigma1=vol, sigma2=vol)
    fn = exp_imbalance(alpha=5.0, lam=100.0, clamp=1.0)
    v1_0 = 0.3 * np.sin(np.pi * x)
    v2_0 = 0.25 * np.sin(np.pi * x) ** 2
    for v in (v1_0, v2_0):
        v[0] = v[-1] = 0.0
    noise = (sample_white_noise(small_grid, 21, 0),
             sample_white_noise(small_grid, 21, 1))
    rep = picard_iterate(v1_0, v2_0, coeffs, fn, 2.0, noise, small_grid,
                         n_iters=8, tables=small_tables, compare_direct=True)
    d = rep.d
    assert all(np.isfinite(d))
    for i in range(1, 5):
        if d[i] > 1e-13:
            assert d[i + 1] / d[i] <= 0.8
    assert d[-1] <= 1e-4
    bound = 5.0 * (small_grid.dx + np.sqrt(small_grid.dt))
    assert rep.final_gap_vs_direct <= bound
    # iterates stay nonnegative with pinned ends
    assert rep.v1.values.min() >= 0.0
    assert np.all(rep.v1.values[:, 0] == 0.0)


def test_shorter_horizon_contracts_faster():
    def drift(xv, u):
        return 0.5 - 0.5 * u

    def vol(xv, u):
        return 0.2 + 0.1 * u / (1.0 + np.abs(u))

    coeffs = ModelCoefficients(f1=drift, f2=drift, sigma1=vol, sigma2=vol)
    fn = exp_imbalance(alpha=5.0, lam=100.0, clamp=1.0)
    d3 = {}
    for T, nt in ((0.01, 128), (0.02, 256), (0.04, 512)):
        g = build_grid("compact", 16, T, nt)
        v0 = 0.3 * np.sin(np.pi * g.space_nodes())
        v0[0] = v0[-1] = 0.0
        noise = (sample_white_noise(g, 5, 0), sample_white_noise(g, 5, 1))
        rep = picard_iterate(v0, v0.copy(), coeffs, fn, 2.0, noise, g, n_iters=3)
        d3[T] = rep.d[-1]
    assert d3[0.01] < d3[0.02] < d3[0.04]


def test_iteration_report_json(small_grid, small_tables):
    z = np.zeros(small_grid.n_nodes)
    noise = (_zero_noise(small_grid), _zero_noise(small_grid))
    rep = picard_iterate(z, z.copy(), constant_coefficients(f=0.0, sigma=0.0),
                         zero_boundary(), np.inf, noise, small_grid,
                         n_iters=2, tables=small_tables)
    payload = rep.to_json_dict()
    assert payload["schema"] == 1
    assert set(payload) >= {"d", "iters", "converged", "final_gap_vs_direct"}


def test_determinism(small_grid, small_tables):
    z0 = 0.2 * np.sin(np.pi * small_grid.space_nodes())
    z0[0] = z0[-1] = 0.0
    coeffs = constant_coefficients(f=0.2, sigma=0.3)
    fn = exp_imbalance(clamp=1.0)
    noise = (sample_white_noise(small_grid, 9, 0), sample_white_noise(small_grid, 9, 1))
    r1 = picard_iterate(z0, z0.copy(), coeffs, fn, 1.0, noise, small_grid,
                        n_iters=3, tables=small_tables)
    r2 = picard_iterate(z0, z0.copy(), coeffs, fn, 1.0, noise, small_grid,
                        n_iters=3, tables=small_tables)
    assert r1.d == r2.d
    assert np.array_equal(r1.v1.values, r2.v1.values)


def test_halfline_mild_solver_runs():
    g = build_grid("halfline", 64, 0.01, 256, length=4.0, weight_r=0.3)
    tables = build_kernel_tables(g)
    assert tables.n_images == 0
    v0 = g.space_nodes() * np.exp(-g.space_nodes())
    v0[0] = v0[-1] = 0.0
    coeffs = constant_coefficients(f=0.0, sigma=0.0)
    w = mild_solve_w(Field(g, np.tile(v0, (g.nt + 1, 1))),
                     Field(g, np.zeros((g.nt + 1, g.n_nodes))),
                     coeffs, zero_boundary(), np.inf, _zero_noise(g), g,
                     side=1, tables=tables)
    # pure initial-data evolution stays bounded by the heat semigroup
    assert w.values.max() <= v0.max() + 1e-9
    assert np.max(np.abs(w.values[0] - v0)) == 0.0
