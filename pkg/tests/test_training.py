import os

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from pinnkit.autodiff import ops
from pinnkit.geometry import Interval
from pinnkit.network import Network, NetworkSpec, init
from pinnkit.problem import DirichletBC, PointSets, Problem, poisson_residual
from pinnkit.training import (
    AdamConfig,
    AdamState,
    Callback,
    FirstDerivative,
    LbfgsConfig,
    Model,
    ModelCheckpoint,
    MovieDumper,
    OperatorPredictor,
    OptimizerError,
    SpectrumMonitor,
    TrainState,
    adam_step,
    fourier_amplitudes,
    lbfgs_run,
    load_checkpoint,
    save_checkpoint,
    select_best,
    spectrum_monitor,
    spectrum_probes,
    train,
    write_history_csv,
)

# --- Adam ---------------------------------------------------------------------


def test_adam_config_validation():
    for kw in ({"lr": 0}, {"beta1": 1.0}, {"beta2": -0.1}):
        with pytest.raises(ValueError):
            AdamConfig(**kw)


def test_adam_zero_gradient():
    theta = np.array([1.0, -2.0])
    out = adam_step(theta, np.zeros(2), AdamState.zeros(2), AdamConfig())
    np.testing.assert_array_equal(out, theta)


def test_adam_first_step():
    g = np.array([0.5, -3.0, 1e-3])
    cfg = AdamConfig(lr=0.01)
    out = adam_step(np.zeros(3), g, AdamState.zeros(3), cfg)
    np.testing.assert_allclose(out, -cfg.lr * g / (np.abs(g) + cfg.eps), rtol=1e-12)
    np.testing.assert_allclose(out, -cfg.lr * np.sign(g), rtol=1e-4)


def test_adam_quadratic_convergence():
    theta, st_, cfg = np.array([1.0]), AdamState.zeros(1), AdamConfig(lr=0.01)
    for _ in range(1000):
        theta = adam_step(theta, 2 * theta, st_, cfg)
    assert abs(theta[0]) < 1e-2


def adam_step_cap(t, b1=0.9, b2=0.999):
    """Largest |m_hat| / sqrt(v_hat) over all gradient histories of length t.

    Both bias-corrected moments are weighted averages, m_hat = sum(a g) and
    v_hat = sum(b g^2), so Cauchy-Schwarz gives sqrt(sum(a^2 / b)), attained
    at g proportional to a / b.
    """
    k = np.arange(1, t + 1)
    a = (1 - b1) * b1 ** (t - k) / (1 - b1 ** t)
    b = (1 - b2) * b2 ** (t - k) / (1 - b2 ** t)
    return np.sqrt(np.sum(a * a / b)), a / b


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), lr=st.floats(1e-4, 1e-1))
@example(seed=366, lr=0.0625)
def test_adam_step_bound(seed, lr):
    rng = np.random.default_rng(seed)
    cfg = AdamConfig(lr=lr)
    state = AdamState.zeros(6)
    theta = rng.normal(size=6)
    for t in range(1, 21):
        g = rng.normal(size=6) * rng.choice([1e-6, 1.0, 1e3])
        new = adam_step(theta, g, state, cfg)
        assert np.max(np.abs(new - theta)) <= lr * adam_step_cap(t)[0] * (1 + 1e-6)
        theta = new


def test_adam_first_step_is_lr():
    state = AdamState.zeros(3)
    new = adam_step(np.zeros(3), np.array([1e-3, -2.0, 5e4]), state, AdamConfig(lr=0.01))
    np.testing.assert_allclose(np.abs(new), 0.01, rtol=1e-4)


def test_adam_step_can_exceed_lr():
    # a growing gradient drives |m_hat| / sqrt(v_hat) above 1 from the second step
    cap, worst = adam_step_cap(2)
    assert cap > 1.001
    cfg, state, theta = AdamConfig(lr=0.1), AdamState.zeros(1), np.zeros(1)
    for g in worst:
        new = adam_step(theta, np.array([g]), state, cfg)
        step, theta = abs(new[0] - theta[0]), new
    assert step == pytest.approx(0.1 * cap, rel=1e-6)
    assert step > 0.1


def test_adam_rejects_nan_gradient():
    with pytest.raises(OptimizerError):
        adam_step(np.zeros(2), np.array([np.nan, 0.0]), AdamState.zeros(2), AdamConfig())


def test_adam_step_decay():
    cfg = AdamConfig(lr=1.0, decay_every=10, decay_rate=0.5)
    assert cfg.lr_at(0) == 1.0 and cfg.lr_at(10) == 0.5 and cfg.lr_at(25) == 0.25


# --- L-BFGS -------------------------------------------------------------------

def spd(seed=0, n=5):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return q @ np.diag(np.linspace(1, 20, n)) @ q.T


def test_lbfgs_quadratic():
    A = spd()
    res = lbfgs_run(lambda x: (0.5 * x @ A @ x, A @ x), np.ones(5))
    assert res.status == "converged"
    assert res.iterations <= 25
    assert np.max(np.abs(res.g)) < 1e-8


def test_lbfgs_at_minimum():
    A = spd()
    res = lbfgs_run(lambda x: (0.5 * x @ A @ x, A @ x), np.zeros(5))
    assert res.iterations <= 1 and res.status == "converged"


def rosenbrock(x):
    a, b = x
    f = (1 - a) ** 2 + 100 * (b - a * a) ** 2
    g = np.array([-2 * (1 - a) - 400 * a * (b - a * a), 200 * (b - a * a)])
    return f, g


def test_lbfgs_rosenbrock():
    res = lbfgs_run(rosenbrock, np.array([-1.2, 1.0]))
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-4)
    assert np.all(np.diff(res.losses) <= 0)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 1000))
def test_lbfgs_monotone_on_convex(seed):
    rng = np.random.default_rng(seed)
    A = spd(seed, 8)
    b = rng.normal(size=8)

    def fun(x):
        return 0.5 * x @ A @ x - b @ x + 0.1 * np.sum(x ** 4), A @ x - b + 0.4 * x ** 3

    res = lbfgs_run(fun, rng.normal(size=8) * 3, LbfgsConfig(memory=5))
    assert np.all(np.diff(res.losses) <= 0)
    assert np.max(np.abs(res.g)) < 1e-6


def test_lbfgs_nonfinite_start():
    with pytest.raises(OptimizerError):
        lbfgs_run(lambda x: (np.nan, x), np.ones(2))


def test_lbfgs_linesearch_failure_keeps_best():
    # gradient inconsistent with the loss: no step satisfies sufficient decrease
    res = lbfgs_run(lambda x: (float(x @ x), -2 * x), np.ones(3))
    assert res.status == "linesearch_failed"
    np.testing.assert_array_equal(res.x, np.ones(3))


def test_lbfgs_config_validation():
    with pytest.raises(ValueError):
        LbfgsConfig(memory=0)
    with pytest.raises(ValueError):
        LbfgsConfig(c1=0.9, c2=0.1)


# --- training loop ---------------------------------------------------------------

def poisson1d(n=32):
    geom = Interval(-1, 1)
    prob = Problem("p1", geom, poisson_residual(1, lambda x: np.pi ** 2 * np.sin(np.pi * x[:, 0])),
                   [DirichletBC(0.0)])
    pts = PointSets(np.linspace(-1, 1, n + 2)[1:-1, None], np.array([[-1.0], [1.0]]))
    return prob, pts


def small_model(width=8, n=16, strategy="fixed", batch_size=None):
    prob, pts = poisson1d(n)
    pts = PointSets(pts.T_f, pts.T_b, strategy, batch_size)
    return Model(prob, NetworkSpec.fnn(1, 2, width, 1), pts)


def test_zero_iterations_keep_params():
    model = small_model()
    st0 = train(model, [AdamConfig(iterations=0)], seed=3)
    np.testing.assert_array_equal(st0.params.flatten(), model.init_params(3).flatten())
    assert st0.iteration == 0 and len(st0.history) == 1


def test_history_rows_and_csv(tmp_path):
    model = small_model()
    st0 = train(model, [AdamConfig(iterations=5)], seed=0)
    assert [r["iteration"] for r in st0.history] == list(range(6))
    p = tmp_path / "h.csv"
    write_history_csv(p, st0.history)
    lines = p.read_text().splitlines()
    assert lines[0] == "iteration,loss_total,loss_f,loss_b,loss_i"
    assert len(lines) == 7


def test_deterministic_history():
    a = train(small_model(strategy="resample", batch_size=8), [AdamConfig(iterations=20)], seed=1)
    b = train(small_model(strategy="resample", batch_size=8), [AdamConfig(iterations=20)], seed=1)
    assert a.history == b.history


STAGES = [AdamConfig(lr=1e-2, iterations=12), LbfgsConfig(max_iter=10)]


class Stop(Exception):
    pass


class StopAt(Callback):
    def __init__(self, at):
        super().__init__(1)
        self.at = at

    def __call__(self, model, state):
        if state.iteration == self.at:
            raise Stop


@pytest.mark.parametrize("stop", [5, 16])
def test_restart_reproduces_trajectory(tmp_path, stop):
    ref = train(small_model(strategy="resample", batch_size=8), STAGES, seed=2)
    path = tmp_path / "ck.npz"
    model = small_model(strategy="resample", batch_size=8)
    with pytest.raises(Stop):
        train(model, STAGES, seed=2, callbacks=[ModelCheckpoint(path, 1), StopAt(stop)])
    spec, state = load_checkpoint(path)
    assert state.iteration == stop
    resumed = train(small_model(strategy="resample", batch_size=8), STAGES, state)
    assert resumed.history == ref.history
    np.testing.assert_array_equal(resumed.params.flatten(), ref.params.flatten())


def test_checkpoint_roundtrip(tmp_path):
    model = small_model()
    st0 = train(model, [AdamConfig(iterations=3)], seed=0)
    st0.adam = AdamState(np.ones(st0.params.count()), np.full(st0.params.count(), 2.0), 3)
    save_checkpoint(tmp_path / "c.npz", model.spec, st0)
    spec, st1 = load_checkpoint(tmp_path / "c.npz")
    assert spec == model.spec
    assert st1.params.flatten().tobytes() == st0.params.flatten().tobytes()
    assert st1.adam.t == 3 and np.all(st1.adam.v == 2.0)
    assert st1.rng.bit_generator.state == st0.rng.bit_generator.state


def test_checkpoint_write_failure_warns(tmp_path):
    cb = ModelCheckpoint(tmp_path / "missing" / "dir" / "c.npz", period=1)
    with pytest.warns(UserWarning):
        train(small_model(), [AdamConfig(iterations=2)], callbacks=[cb])


def test_callback_period_validation():
    with pytest.raises(ValueError):
        MovieDumper(np.zeros((2, 1)), period=0)


def test_recording_callbacks(tmp_path):
    model = small_model()
    pts = np.array([[0.0], [0.5]])
    movie = MovieDumper(pts, period=2, path=tmp_path / "m.csv")
    deriv = FirstDerivative(pts, axis=0, period=2)
    op = OperatorPredictor(lambda x, F, lam: F.dd(0, 0), pts, period=2, second=(0,))
    st0 = train(model, [AdamConfig(iterations=4)], callbacks=[movie, deriv, op])
    assert movie.iterations == [2, 4]
    np.testing.assert_allclose(movie.frames[-1], model.predict(st0.params, pts)[:, 0])
    assert len((tmp_path / "m.csv").read_text().splitlines()) == 3
    h = 1e-5
    fd = (model.predict(st0.params, pts + h) - model.predict(st0.params, pts - h))[:, 0] / (2 * h)
    np.testing.assert_allclose(deriv.frames[-1], fd, rtol=1e-6)
    assert len(op.frames) == 2


def test_poisson_1d_converges():
    prob, pts = poisson1d(64)
    model = Model(prob, NetworkSpec.fnn(1, 3, 20, 1), pts)
    st0 = train(model, [AdamConfig(iterations=10_000), LbfgsConfig()], seed=0)
    x = np.linspace(-1, 1, 201)[:, None]
    u = model.predict(st0.params, x)[:, 0]
    exact = np.sin(np.pi * x[:, 0])
    assert np.linalg.norm(u - exact) / np.linalg.norm(exact) < 1e-3


# --- spectrum -----------------------------------------------------------------

def probe_net(fn):
    spec = NetworkSpec.fnn(1, 1, 2, 1)
    return Network(spec, lambda x, raw: fn(x) + raw * 0.0), init(spec, 0)


def test_spectrum_single_mode():
    net, p = probe_net(lambda x: ops.sin(x * 2.0) * 0.5)
    a = spectrum_monitor(net, p)
    assert a[0] == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(a[1:], 0.0, atol=1e-12)


def test_spectrum_zero_net():
    net, p = probe_net(lambda x: x * 0.0)
    np.testing.assert_array_equal(spectrum_monitor(net, p), 0.0)


def test_spectrum_of_target_is_flat():
    x = spectrum_probes(512)
    f = sum(np.sin(2 * k * x) / (2 * k) for k in range(1, 6))
    a = fourier_amplitudes(f, x, [2 * k for k in range(1, 6)]) * np.array([2 * k for k in range(1, 6)])
    np.testing.assert_allclose(a, 1.0, atol=1e-12)
    assert len(x) == 512 and x[0] == -np.pi and x[-1] < np.pi


def test_spectrum_monitor_callback(tmp_path):
    prob = Problem("f", Interval(-np.pi, np.pi), None, [], [])
    from pinnkit.problem import Observation
    xs = np.linspace(-np.pi, np.pi, 64)[:, None]
    prob.observations = [Observation(xs, np.sin(2 * xs[:, 0]) / 2)]
    model = Model(prob, NetworkSpec.fnn(1, 2, 10, 1), PointSets(np.empty((0, 1)), np.empty((0, 1))))
    mon = SpectrumMonitor(period=5, path=tmp_path / "s.csv")
    train(model, [AdamConfig(lr=1e-2, iterations=10)], callbacks=[mon])
    assert mon.iterations == [5, 10]
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "iteration,amp_k1,amp_k2,amp_k3,amp_k4,amp_k5"
    assert set(mon.first_crossing(10.0).values()) == {None}


# --- multi-restart selection --------------------------------------------------------

def test_select_best_synthetic():
    runs = [[5.0, 3.0, 2.5], [4.0, 1.0], [9.0, 0.5, 2.0]]
    assert select_best(runs) == (1, runs[1])
    rows = [[{"loss_total": 2.0}], [{"loss_total": 2.0}], [{"loss_total": 3.0}]]
    assert select_best(rows)[0] == 0


@given(st.lists(st.floats(0, 1e6), min_size=1, max_size=10))
def test_select_best_is_argmin(finals):
    runs = [[1e9, f] for f in finals]
    i, _ = select_best(runs)
    assert finals[i] == min(finals) and finals.index(min(finals)) == i


def test_select_best_states():
    model = small_model()
    a = train(model, [AdamConfig(iterations=1)], seed=0)
    b = train(small_model(), [AdamConfig(lr=1e-2, iterations=30)], seed=0)
    assert select_best([a, b])[0] == 1
    with pytest.raises(ValueError):
        select_best([])


def test_train_state_moments_shape():
    model = small_model()
    state = TrainState(model.init_params(0))
    with pytest.raises(Stop):
        train(model, [AdamConfig(iterations=5)], state, callbacks=[StopAt(2)])
    assert state.adam.m.shape == state.params.flatten().shape


def test_checkpoint_missing_file(tmp_path):
    from pinnkit.training import CheckpointError
    with pytest.raises(CheckpointError):
        load_checkpoint(os.path.join(tmp_path, "none.npz"))
