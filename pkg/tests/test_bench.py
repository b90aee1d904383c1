import math

import numpy as np
import pytest

from hdsopt.bench import (
    BRANIN_MIN,
    BenchmarkSpec,
    beale_eval,
    branin_eval,
    branin_minima,
    build_benchmark,
    cws_run,
    lattice_resolution,
    make_oracle,
    quad_eval,
    quadmix_eval,
    true_max,
)
from hdsopt.gp_core import MAX_LATTICE_POINTS
from hdsopt.hds import Oracle


def branin_reference(x1, x2):
    a, b, c, r, s, t = 1, 5.1 / (4 * math.pi**2), 5 / math.pi, 6, 10, 1 / (8 * math.pi)
    return a * (x2 - b * x1**2 + c * x1 - r) ** 2 + s * (1 - t) * math.cos(x1) + s


def test_quad_examples():
    x_star = np.array([0.2, -0.4, 0.1])
    assert quad_eval(x_star, x_star, [0], 0.1) == 0
    np.testing.assert_allclose(quad_eval(x_star + [0.1, 0, 0], x_star, [0], 0.1), 1.0, rtol=1e-12)
    np.testing.assert_allclose(quad_eval(x_star + [0, 1.0, 0], x_star, [0], 0.1), 1e-4, rtol=1e-12)


def test_quadmix_examples():
    D, b = 4, 0.1
    x_star = np.zeros(D)
    x = np.array([1.0, 0, 0, 0])
    r = 1 / D
    M = (1 - r) * np.eye(D) + r * np.ones((D, D))
    P = np.diag([1 / b, 0.01, 0.01, 0.01])
    want = float(np.sum((M @ P @ (x - x_star)) ** 2))
    np.testing.assert_allclose(quadmix_eval(x, x_star, [0], b), want, rtol=1e-12)
    np.testing.assert_allclose(want, 118.75, rtol=1e-12)
    assert want >= (1 - r) ** 2 * quad_eval(x, x_star, [0], b)
    assert quadmix_eval(x_star, x_star, [0], b) == 0
    rng = np.random.default_rng(0)
    y, ys = rng.uniform(-1, 1, 6), rng.uniform(-1, 1, 6)
    np.testing.assert_allclose(quadmix_eval(y, ys, [1, 4], b, r_mix=0.0), quad_eval(y, ys, [1, 4], b))


def test_branin_examples():
    u = ((-math.pi - 2.5) / 7.5, (12.275 - 7.5) / 7.5)
    np.testing.assert_allclose(u, (-0.75221, 0.63667), atol=5e-6)
    np.testing.assert_allclose(branin_eval(u), 0.397887, rtol=1e-6)
    np.testing.assert_allclose(branin_eval((0, 0)), branin_reference(2.5, 7.5), rtol=1e-12)
    np.testing.assert_allclose(branin_eval((0, 0)), 24.1299, rtol=1e-5)
    mins = branin_minima()
    assert np.all(np.abs(mins) <= 1)
    for m in mins:
        np.testing.assert_allclose(branin_eval(m), BRANIN_MIN, atol=1e-5)
    g = np.linspace(-1, 1, 201)
    vals = [branin_eval((a, c)) for a in g[::4] for c in g[::4]]
    assert min(vals) >= BRANIN_MIN - 1e-12


def test_beale_examples():
    assert beale_eval((3 / 4.5, 0.5 / 4.5)) == pytest.approx(0.0, abs=1e-24)
    np.testing.assert_allclose(beale_eval((0, 0)), 1.5**2 + 2.25**2 + 2.625**2, rtol=1e-12)
    np.testing.assert_allclose(beale_eval((0, 0)), 14.203125, rtol=1e-12)
    g = np.linspace(-1, 1, 101)
    vals = np.array([beale_eval((a, c)) for a in g for c in g])
    assert np.all(np.isfinite(vals)) and np.all(vals >= 0)


def test_lattice_resolution_guard():
    assert lattice_resolution(1) == 1001
    assert lattice_resolution(2) == 141
    for d in (1, 2, 3, 4):
        r = lattice_resolution(d)
        assert r**d <= MAX_LATTICE_POINTS


def test_spec_validation():
    with pytest.raises(ValueError):
        BenchmarkSpec("nope")
    with pytest.raises(ValueError):
        BenchmarkSpec("branin", D=10, d=3)
    with pytest.raises(ValueError):
        BenchmarkSpec("quad", D=4, active_dims=(1, 1))
    with pytest.raises(ValueError):
        BenchmarkSpec("quad", D=4, active_dims=(4,))
    assert BenchmarkSpec("quad", D=9, d=5, active_dims=(2, 3)).d == 2


@pytest.mark.parametrize("name", ["gp", "quad", "quadmix", "branin", "beale"])
def test_optimum_location_and_inactive_invariance(name):
    spec = BenchmarkSpec(name, D=12, d=2, noise_var=0.1)
    bench = build_benchmark(spec, 4)
    np.testing.assert_allclose(bench.objective(bench.optimum_location), bench.optimum_value, atol=1e-9)
    rng = np.random.default_rng(0)
    inactive = [i for i in range(12) if i not in bench.active_dims]
    for _ in range(20):
        x = rng.uniform(-1, 1, 12)
        x2 = x.copy()
        x2[inactive] = rng.uniform(-1, 1, len(inactive))
        diff = abs(bench.objective(x) - bench.objective(x2))
        if name == "quad":
            # inactive weight 1/100 on offsets of at most 2
            assert diff <= len(inactive) * (2 / 100) ** 2
        elif name == "quadmix":
            # mixing couples inactive offsets to active ones of scale 2/b = 20
            assert diff <= 1.0
        else:
            assert diff == 0
        # maximization: nothing beats the optimum
        assert bench.objective(x) <= bench.optimum_value + 1e-9


def test_costs_nonnegative_and_negated():
    rng = np.random.default_rng(1)
    for name in ("quad", "quadmix", "beale"):
        bench = build_benchmark(BenchmarkSpec(name, D=6, d=2), 0)
        assert bench.optimum_value == 0
        assert all(bench.objective(rng.uniform(-1, 1, 6)) <= 0 for _ in range(50))
    assert build_benchmark(BenchmarkSpec("branin", D=6, d=2), 0).optimum_value == -BRANIN_MIN


def test_gp_true_max_is_lattice_scan():
    spec = BenchmarkSpec("gp", D=5, d=2, active_dims=(1, 3))
    loc, val = true_max(spec, 11)
    bench = build_benchmark(spec, 11)
    assert val == bench.lattice.values.max()
    assert bench.lattice.resolution == 141
    # exhaustive scan through the public objective
    t = bench.lattice.axis
    best = max(bench.objective(np.array([0, a, 0, c, 0])) for a in t[::10] for c in t[::10])
    assert best <= val + 1e-12
    np.testing.assert_allclose(bench.objective(loc), val, atol=1e-12)


def test_quad_true_max():
    spec = BenchmarkSpec("quad", D=7, d=2)
    loc, val = true_max(spec, 2)
    assert val == 0
    np.testing.assert_array_equal(loc, build_benchmark(spec, 2).x_star)


def test_oracle_determinism_and_noise():
    spec = BenchmarkSpec("gp", D=10, d=2, noise_var=0.1)
    a, b = make_oracle(spec, 3), make_oracle(spec, 3)
    x = np.random.default_rng(0).uniform(-1, 1, (30, 10))
    assert [a.eval_true(r) for r in x] == [b.eval_true(r) for r in x]
    assert a.active_dims == b.active_dims and len(a.active_dims) == 2
    ys = np.array([a.eval_noisy(x[0]) for _ in range(10_000)])
    assert a.eval_count == 10_000
    np.testing.assert_allclose(ys.var(), 0.1, rtol=0.05)
    quad = make_oracle(BenchmarkSpec("quad", D=5, d=1), 0)
    assert quad.eval_true(quad.benchmark.x_star) == 0


def test_cws_accounting_and_noiseless_recovery():
    o = Oracle(lambda x: math.sin(5 * x[3]), 10, 0.0, seed=0)
    assert cws_run(o, 1, 2, 0.3, seed=0) == (3,)
    assert o.eval_count == 40
    o = Oracle(lambda x: 0.0, 10, 0.1, seed=0)
    cws_run(o, 2, 5, 0.3, seed=0)
    assert o.eval_count == 100
    o = Oracle(lambda x: math.sin(5 * x[3]), 10, 0.0, seed=0)
    assert cws_run(o, 3, 2, 0.3, seed=0) == (0, 1, 3)
    with pytest.raises(ValueError):
        cws_run(o, 1, 1, 0.3)


def test_cws_recovers_gp_with_generous_budget():
    spec = BenchmarkSpec("gp", D=20, d=2, noise_var=0.1)
    ok = 0
    for s in range(20):
        o = make_oracle(spec, s)
        ok += cws_run(o, 2, 50, 0.3, seed=100 + s) == o.active_dims
    assert ok >= 18
