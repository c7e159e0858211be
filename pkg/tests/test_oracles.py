import numpy as np
import pytest
from scipy.integrate import solve_ivp

from pinnkit.oracles import (
    OdeSystem,
    ResolutionError,
    StiffnessError,
    diffusion_reaction_observations,
    fd_burgers_1d,
    fd_diffusion_reaction,
    fd_poisson_lshape,
    lorenz_observations,
    read_observations_csv,
    rk45,
    write_observations_csv,
)
from pinnkit.oracles.observations import LORENZ_PARAMS, LORENZ_START, _lorenz

NU = 0.01 / np.pi


# --- RK45 -----------------------------------------------------------------------

def test_rk45_exponential_decay():
    traj = rk45(OdeSystem(lambda t, y: -y, [1.0], (0.0, 1.0)), rtol=1e-9, atol=1e-12)
    assert abs(traj(1.0)[0] - np.exp(-1.0)) <= 1e-8


def test_rk45_dense_output_between_steps():
    traj = rk45(OdeSystem(lambda t, y: -y, [1.0], (0.0, 1.0)), rtol=1e-9, atol=1e-12)
    t = np.linspace(0, 1, 37)
    np.testing.assert_allclose(traj(t)[:, 0], np.exp(-t), atol=1e-8)


def test_rk45_constant_trajectory():
    traj = rk45(OdeSystem(lambda t, y: np.zeros_like(y), [2.5, -1.0], (0.0, 4.0)))
    np.testing.assert_array_equal(traj(np.linspace(0, 4, 9)), np.tile([2.5, -1.0], (9, 1)))


def test_rk45_backward_span():
    traj = rk45(OdeSystem(lambda t, y: -y, [np.exp(-1.0)], (1.0, 0.0)), rtol=1e-10, atol=1e-13)
    assert abs(traj(0.0)[0] - 1.0) < 1e-8


@pytest.mark.parametrize("rtol", [1e-6, 1e-8])
def test_rk45_lorenz_tolerance_halving(rtol):
    sys = OdeSystem(_lorenz(*LORENZ_PARAMS), LORENZ_START, (0.0, 3.0))
    a = rk45(sys, rtol=rtol, atol=rtol * 1e-2)(3.0)
    b = rk45(sys, rtol=rtol / 2, atol=rtol * 0.5e-2)(3.0)
    assert np.linalg.norm(a - b) < 10 * rtol * np.linalg.norm(b)


def test_rk45_lorenz_matches_scipy_dop853():
    sys = OdeSystem(_lorenz(*LORENZ_PARAMS), LORENZ_START, (0.0, 3.0))
    ours = rk45(sys, rtol=1e-10, atol=1e-12)(3.0)
    ref = solve_ivp(_lorenz(*LORENZ_PARAMS), (0, 3), LORENZ_START, method="DOP853",
                    rtol=1e-12, atol=1e-12).y[:, -1]
    np.testing.assert_allclose(ours, ref, rtol=1e-7)


def test_rk45_fixed_step_order_five():
    ns = np.array([4, 8, 16, 32])
    errs = []
    for n in ns:
        traj = rk45(OdeSystem(lambda t, y: -y, [1.0], (0.0, 1.0)), step=1.0 / n)
        assert traj.n_steps == n
        errs.append(abs(traj(1.0)[0] - np.exp(-1.0)))
    slope = np.polyfit(np.log(1.0 / ns), np.log(errs), 1)[0]
    assert abs(slope - 5) <= 0.3


def test_rk45_stiffness_error():
    # finite-time blowup: y' = y^2 from y(0) = 1 is singular at t = 1
    with pytest.raises(StiffnessError):
        rk45(OdeSystem(lambda t, y: y * y, [1.0], (0.0, 2.0)), rtol=1e-8, atol=1e-10)


def test_rk45_rejects_empty_span():
    with pytest.raises(ValueError):
        rk45(OdeSystem(lambda t, y: -y, [1.0], (1.0, 1.0)))


def test_rk45_query_outside_span():
    traj = rk45(OdeSystem(lambda t, y: -y, [1.0], (0.0, 1.0)))
    with pytest.raises(ValueError):
        traj(1.5)


# --- Burgers FD -------------------------------------------------------------------

def test_burgers_large_viscosity_decays():
    sol = fd_burgers_1d(1.0, 41, 4000)
    amp = np.max(np.abs(sol.values[..., 0]), axis=1)
    assert np.all(np.diff(amp) < 0)
    assert amp[-1] < 1e-3


def test_burgers_odd_symmetry():
    sol = fd_burgers_1d(NU, 201, 20000)
    u = sol.values[..., 0]
    np.testing.assert_allclose(u, -u[:, ::-1], atol=1e-10)


def test_burgers_refinement():
    coarse = fd_burgers_1d(NU, 201, 20000).at(0.5, 0.9)
    mid = fd_burgers_1d(NU, 401, 80000).at(0.5, 0.9)
    assert abs(coarse - mid) < 1e-3


def test_burgers_refinement_value_frozen():
    # finest grid (801 x 320000) run once offline
    assert fd_burgers_1d(NU, 401, 80000).at(0.5, 0.9) == pytest.approx(-0.4063119228, abs=1e-5)


def test_burgers_boundaries_stay_zero():
    sol = fd_burgers_1d(NU, 101, 5000)
    assert np.all(sol.values[:, [0, -1], 0] == 0.0)
    np.testing.assert_allclose(sol.values[0, :, 0], -np.sin(np.pi * sol.x), atol=1e-15)


def test_burgers_unstable_step_rejected():
    with pytest.raises(ResolutionError):
        fd_burgers_1d(NU, 1001, 100)


def test_burgers_blowup_detected():
    # convectively stable but the centred scheme with no viscosity grows unboundedly
    with pytest.raises(ResolutionError):
        fd_burgers_1d(0.0, 201, 200, t_end=1.0, n_save=2)


def test_grid_spacing_uniform():
    sol = fd_burgers_1d(NU, 101, 5000)
    assert np.all(np.diff(sol.x) > 0) and np.ptp(np.diff(sol.x)) < 1e-12
    assert np.all(np.diff(sol.t) > 0) and np.ptp(np.diff(sol.t)) < 1e-12


# --- diffusion-reaction FD --------------------------------------------------------

def test_dr_null_dynamics_frozen():
    sol = fd_diffusion_reaction(0.0, 0.0, 51, 100, n_save=101)
    x = sol.x
    init = np.exp(-20 * x[1:-1])
    for c in (0, 1):
        np.testing.assert_array_equal(sol.values[1, 1:-1, c], init)
        np.testing.assert_array_equal(sol.values[-1, 1:-1, c], init)


def test_dr_positivity():
    sol = fd_diffusion_reaction(2e-3, 0.1, 101, 10000)
    assert np.all(sol.values >= 0)


def test_dr_refinement():
    a = fd_diffusion_reaction(2e-3, 0.1, 101, 10000)
    b = fd_diffusion_reaction(2e-3, 0.1, 201, 40000)
    for c in (0, 1):
        assert abs(a.at(0.5, 5.0, c) - b.at(0.5, 5.0, c)) < 1e-3


def test_dr_refinement_second_order():
    vals = [fd_diffusion_reaction(2e-3, 0.1, nx, nt).at(0.5, 5.0, 0)
            for nx, nt in ((51, 2500), (101, 10000), (201, 40000))]
    ratio = abs(vals[0] - vals[1]) / abs(vals[1] - vals[2])
    assert 3.0 < ratio < 5.0


def test_burgers_refinement_second_order():
    vals = [fd_burgers_1d(NU, nx, nt).at(0.5, 0.9) for nx, nt in ((101, 5000), (201, 20000),
                                                                  (401, 80000))]
    ratio = abs(vals[0] - vals[1]) / abs(vals[1] - vals[2])
    assert 3.0 < ratio < 5.0


def test_dr_unstable_rejected():
    with pytest.raises(ResolutionError):
        fd_diffusion_reaction(1.0, 0.1, 101, 100)


def test_save_plan_must_divide():
    with pytest.raises(ValueError):
        fd_diffusion_reaction(2e-3, 0.1, 21, 1001, n_save=11)


# --- Poisson FD -------------------------------------------------------------------

def test_poisson_lshape_masked_and_zero_on_boundary():
    sol = fd_poisson_lshape(16)
    X, Y = np.meshgrid(sol.x, sol.y)
    assert np.all(np.isnan(sol.u[(X > 0) & (Y > 0)]))
    edge = (np.abs(X) == 1) | (np.abs(Y) == 1)
    assert np.all(sol.u[edge & np.isfinite(sol.u)] == 0.0)
    assert np.all(sol.u[np.isfinite(sol.u)] >= 0)


def test_poisson_lshape_discrete_equation():
    sol = fd_poisson_lshape(16)
    h = sol.x[1] - sol.x[0]
    u = sol.u
    j, i = 4, 5  # interior node in the lower-left square
    lap = (u[j, i + 1] + u[j, i - 1] + u[j + 1, i] + u[j - 1, i] - 4 * u[j, i]) / h ** 2
    assert lap == pytest.approx(-1.0, abs=1e-10)


def test_poisson_lshape_refinement():
    a, b = fd_poisson_lshape(64), fd_poisson_lshape(128)
    # (-0.5, -0.5) is a node of both grids
    ua = a.u[16, 16]
    ub = b.u[32, 32]
    assert abs(ua - ub) < 1e-3 * abs(ub)


def test_poisson_lshape_requires_even_n():
    with pytest.raises(ValueError):
        fd_poisson_lshape(7)


def test_poisson_nodes_shapes():
    pts, vals = fd_poisson_lshape(8).nodes()
    assert pts.shape == (len(vals), 2)
    # 81 nodes minus the open upper-right quarter (4 x 4)
    assert len(vals) == 81 - 16


# --- observations -----------------------------------------------------------------

def test_lorenz_observations_start_and_shape():
    t, y = lorenz_observations()
    assert t.shape == (25, 1) and y.shape == (25, 3)
    np.testing.assert_allclose(t[:, 0], np.linspace(0, 3, 25))
    np.testing.assert_allclose(y[0], LORENZ_START)


def test_lorenz_observations_noise_flag():
    _, clean = lorenz_observations()
    _, noisy = lorenz_observations(noise=0.1, rng=0)
    d = noisy - clean
    assert 0.05 < d.std() < 0.2


def test_dr_observations_are_grid_values():
    pts, vals = diffusion_reaction_observations(50, rng=3)
    sol = fd_diffusion_reaction(2e-3, 0.1, 101, 10000)
    for c in (0, 1):
        np.testing.assert_allclose(sol.at(pts[:, 0], pts[:, 1], c), vals[:, c], atol=1e-12)
    assert len(np.unique(pts, axis=0)) == 50


def test_observation_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    pts, vals = rng.random((7, 2)), rng.standard_normal((7, 2))
    path = tmp_path / "obs.csv"
    write_observations_csv(path, pts, vals, ["x", "t"], ["ca", "cb"])
    assert path.read_text().splitlines()[0] == "x,t,ca,cb"
    p2, v2 = read_observations_csv(path, 2)
    np.testing.assert_array_equal(p2, pts)
    np.testing.assert_array_equal(v2, vals)


def test_oracles_independent_of_network_path():
    import importlib
    for name in ("fd", "rk45", "observations"):
        mod = importlib.import_module(f"pinnkit.oracles.{name}")
        src = open(mod.__file__).read()
        for dep in ("pinnkit.autodiff", "pinnkit.network", "pinnkit.problem", "pinnkit.training"):
            assert dep not in src
