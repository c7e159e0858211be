import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinnkit.autodiff import ops
from pinnkit.geometry import Interval
from pinnkit.network import Network, NetworkSpec, init
from pinnkit.problem import DirichletBC, PointSets, Problem, Residual, poisson_residual
from pinnkit.rar import (
    RarConfig,
    estimate_mean_residual,
    rar_loop,
    select_worst,
    worst_indices,
    write_added_points_csv,
)
from pinnkit.training import AdamConfig, Model, train


def const_residual(c):
    return Residual(lambda x, F, lam: F.u(0) * 0.0 + c, max_order=0)


def any_net():
    spec = NetworkSpec.fnn(1, 1, 3, 1)
    return Network(spec), init(spec, 0)


def test_config_validation():
    for kw in ({"m": 0}, {"E0": 0.0}, {"m": 5, "pool_size": 3}, {"max_rounds": -1}):
        with pytest.raises(ValueError):
            RarConfig(**kw)


def test_mean_of_constant_residual():
    net, p = any_net()
    e, norms = estimate_mean_residual(net, p, const_residual(2.0), np.linspace(0, 1, 7)[:, None])
    assert e == pytest.approx(2.0)
    assert norms.shape == (7,)


def test_mean_of_given_residuals():
    net, p = any_net()
    res = Residual(lambda x, F, lam: F.u(0) * 0.0 + x[:, 0], max_order=0)
    e, _ = estimate_mean_residual(net, p, res, np.array([[3.0], [1.0], [2.0]]))
    assert e == pytest.approx(2.0)


def test_mean_residual_of_exact_solution():
    spec = NetworkSpec.fnn(1, 1, 2, 1)
    net = Network(spec, lambda x, raw: ops.sin(x * np.pi) + raw * 0.0)
    res = poisson_residual(1, lambda x: np.pi ** 2 * np.sin(np.pi * x[:, 0]))
    e, _ = estimate_mean_residual(net, init(spec, 0), res, Interval(-1, 1).random_points(500, 0), chunk=64)
    assert e <= 1e-8


def test_mean_residual_nan_aborts():
    net, p = any_net()
    with pytest.raises(FloatingPointError):
        estimate_mean_residual(net, p, const_residual(np.nan), np.zeros((2, 1)))


def test_select_worst_examples():
    pool = np.array([[0.1], [0.2], [0.3]])
    np.testing.assert_array_equal(select_worst(pool, [3, 1, 2], 1), [[0.1]])
    np.testing.assert_array_equal(select_worst(pool, [3, 1, 2], 3), pool[[0, 2, 1]])
    with pytest.raises(ValueError):
        select_worst(pool, [3, 1, 2], 4)


def test_select_worst_ties_by_index():
    pool = np.arange(5.0)[:, None]
    np.testing.assert_array_equal(select_worst(pool, [1, 2, 2, 0, 2], 2).ravel(), [1.0, 2.0])


def test_select_worst_vs_sort_oracle():
    rng = np.random.default_rng(0)
    pool = rng.uniform(size=(1000, 2))
    r = rng.exponential(size=1000)
    for m in (1, 7, 100, 1000):
        oracle = pool[sorted(range(1000), key=lambda i: (-r[i], i))[:m]]
        np.testing.assert_array_equal(select_worst(pool, r, m), oracle)


@settings(max_examples=50)
@given(r=st.lists(st.integers(0, 5), min_size=1, max_size=40), data=st.data())
def test_select_worst_property(r, data):
    m = data.draw(st.integers(1, len(r)))
    idx = worst_indices(r, m)
    expected = sorted(range(len(r)), key=lambda i: (-r[i], i))[:m]
    assert list(idx) == expected


def rar_model(n=16):
    geom = Interval(-1, 1)
    prob = Problem("p1", geom, poisson_residual(1, lambda x: np.pi ** 2 * np.sin(np.pi * x[:, 0])),
                   [DirichletBC(0.0)])
    pts = PointSets(geom.random_points(n, 0), np.array([[-1.0], [1.0]]))
    return Model(prob, NetworkSpec.fnn(1, 2, 8, 1), pts)


def test_infinite_threshold_stops_immediately():
    model = rar_model()
    state = train(model, [AdamConfig(iterations=5)])
    before = model.points.T_f.copy()
    res = rar_loop(model, RarConfig(E0=np.inf), state, rng=0)
    assert res.rounds == 0 and res.converged and res.log == []
    np.testing.assert_array_equal(model.points.T_f, before)


def test_bookkeeping_and_growth(tmp_path):
    model = rar_model()
    state = train(model, [AdamConfig(iterations=5)])
    sizes = []
    start = model.points.T_f.copy()

    class Watch:
        period = 1

        def __call__(self, m, s):
            if not sizes or sizes[-1][0] != len(m.points.T_f):
                sizes.append((len(m.points.T_f), m.points.T_f.copy()))

    cfg = RarConfig(m=2, E0=1e-12, inner_iters=3, max_rounds=4)
    res = rar_loop(model, cfg, state, rng=1, callbacks=[Watch()])
    assert not res.converged
    assert res.rounds == 4
    assert len(res.log) == res.rounds * cfg.m
    assert len(model.points.T_f) == len(start) + 8
    assert len(res.errors) == 5
    # monotone growth: each set is a prefix-extension of the previous one
    prev = start
    for n, pts in sizes:
        np.testing.assert_array_equal(pts[: len(prev)], prev)
        prev = pts
    assert len(np.unique(model.points.T_f, axis=0)) == len(model.points.T_f)
    for row in res.log:
        rnd, x, r, e_before, e_after = row[0], row[1], row[2], row[3], row[4]
        assert e_before == res.errors[rnd] and e_after == res.errors[rnd + 1]
        assert r >= 0
    p = tmp_path / "added.csv"
    write_added_points_csv(p, res.log, 1)
    lines = p.read_text().splitlines()
    assert lines[0] == "round,x0,residual,E_r_before,E_r_after"
    assert len(lines) == 9


def test_added_points_have_large_residuals():
    model = rar_model()
    state = train(model, [AdamConfig(iterations=50, lr=1e-2)])
    res = rar_loop(model, RarConfig(m=1, E0=1e-12, inner_iters=0, max_rounds=1, pool_size=200), state, rng=3)
    (row,) = res.log
    assert row[2] >= res.errors[0]


def test_adam_moments_carry_across_rounds():
    model = rar_model()
    state = train(model, [AdamConfig(iterations=20, lr=1e-2)])
    assert state.adam is not None and state.adam.t == 20
    res = rar_loop(model, RarConfig(m=1, E0=1e-12, inner_iters=5, max_rounds=3), state, rng=0)
    assert res.state.adam.t == 35
    assert res.state.iteration == 35


def test_lbfgs_inner_optimizer():
    model = rar_model()
    state = train(model, [AdamConfig(iterations=20, lr=1e-2)])
    res = rar_loop(model, RarConfig(m=1, E0=1e-12, inner_iters=4, max_rounds=2,
                                    inner_optimizer="lbfgs"), state, rng=0)
    assert res.rounds == 2
    assert 20 < res.state.iteration <= 28
    assert res.state.lbfgs_status in ("converged", "max_iter", "linesearch_failed")
    with pytest.raises(ValueError):
        RarConfig(inner_optimizer="sgd")
