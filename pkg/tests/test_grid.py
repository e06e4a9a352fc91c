import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmlab.grid import (GridFunction, RadialGrid, SpaceParams, default_grid, derivative, derivative_norm,
                        lp_norm, make_grid, normalize, radial_decay_bound, read_csv, weighted_integral,
                        write_csv, x_norm)


def test_make_grid_decades():
    # three decades of spacing at 21 nodes places 1, 10, 100 on nodes 0, 10, 20
    g = make_grid(1, 100, 21)
    assert g.nodes[[0, 10, 20]] == pytest.approx([1.0, 10.0, 100.0], rel=1e-14)


def test_default_grid_step():
    g = make_grid(1e-8, 1e6, 4096)
    assert g.log_step == pytest.approx(14 * math.log(10) / 4095, rel=1e-14)
    assert np.allclose(np.diff(g.log_nodes), g.log_step, rtol=1e-9)
    assert g.nodes[0] == 1e-8 and g.nodes[-1] == 1e6


@pytest.mark.parametrize("args", [(10, 1, 32), (0, 1, 32), (1, 100, 3), (1, 100, 20.5), (-1, 1, 32)])
def test_make_grid_rejects(args):
    with pytest.raises(ValueError):
        make_grid(*args)


def test_env_override(monkeypatch):
    monkeypatch.setenv("TMLAB_GRID_NODES", "512")
    assert default_grid().n_nodes == 512
    monkeypatch.delenv("TMLAB_GRID_NODES")
    assert default_grid().n_nodes == 4096


def test_grid_function_validation(grid):
    with pytest.raises(ValueError):
        GridFunction(grid, np.zeros(3))
    bad = np.zeros(grid.n_nodes)
    bad[5] = np.nan
    with pytest.raises(ValueError):
        GridFunction(grid, bad)
    with pytest.raises(ValueError):
        GridFunction(grid, np.ones(grid.n_nodes)) + GridFunction(RadialGrid(1e-8, 1e6, 1024), np.ones(1024))


@pytest.mark.parametrize("theta", [-0.5, 0.0, 1.0, 2.0, 2.3])
def test_gamma_integral(grid, theta):
    f = GridFunction.from_callable(grid, lambda r: np.exp(-r))
    assert weighted_integral(f, theta) == pytest.approx(math.gamma(theta + 1), rel=1e-6)


@pytest.mark.parametrize("alpha0, gamma", [(0.0, 1.0), (-0.5, 0.5), (1.0, 3.0), (2.3, 0.7)])
def test_exp_power_l4(grid, alpha0, gamma):
    f = GridFunction.from_callable(grid, lambda r: np.exp(-4 * r**gamma))
    k = (alpha0 + 1) / gamma
    assert weighted_integral(f, alpha0) == pytest.approx(math.gamma(k) / (4**k * gamma), rel=1e-6)


def test_zero_and_domain(grid):
    z = GridFunction(grid, np.zeros(grid.n_nodes))
    assert weighted_integral(z, 0.0) == 0.0
    assert lp_norm(z, 2, 0.0) == 0.0
    assert x_norm(z, SpaceParams(2, 0)) == 0.0
    with pytest.raises(ValueError):
        weighted_integral(z, -1.0)
    with pytest.raises(ValueError):
        normalize(z, SpaceParams(2, 0))


@pytest.mark.parametrize("theta", [-0.5, 0.0, 1.0, 2.3])
def test_quadrature_convergence(theta):
    # halving the log step on a deliberately coarse grid
    errs = []
    for n in (40, 79):
        g = RadialGrid(1e-6, 60.0, n)
        f = GridFunction.from_callable(g, lambda r: np.exp(-r))
        errs.append(abs(weighted_integral(f, theta) - math.gamma(theta + 1)))
    assert errs[1] < 1e-13 or errs[0] / errs[1] >= 3.5


def test_derivative_exact_on_log(grid):
    f = GridFunction.from_callable(grid, np.log)
    d = derivative(f)
    assert np.allclose(d.values * grid.nodes, 1.0, rtol=1e-10)


def test_derivative_square(grid):
    f = GridFunction.from_callable(grid, lambda r: r**2)
    d = derivative(f)
    inner = slice(3, -3)
    rel = np.abs(d.values[inner] - 2 * grid.nodes[inner]) / (2 * grid.nodes[inner])
    assert rel.max() <= grid.log_step**2


def test_derivative_constant(grid):
    d = derivative(GridFunction(grid, np.full(grid.n_nodes, 3.0)))
    # zero up to rounding in s; the 1/r factor magnifies it near r_min
    assert np.max(np.abs(d.values * grid.nodes)) < 1e-12


def test_derivative_norm_exp(grid):
    # |(e^{-r})'|^2 in L^2_1 is 1/4
    f = GridFunction.from_callable(grid, lambda r: np.exp(-r))
    assert derivative_norm(f, 2, 1.0) ** 2 == pytest.approx(0.25, rel=1e-7)


def test_x_norm_closed_form(grid):
    gam, a0 = 0.8, 0.5
    f = GridFunction.from_callable(grid, lambda r: np.exp(-(r**gam)))
    k = (a0 + 1) / gam
    expected = math.sqrt(math.gamma(k) / (2**k * gam) + gam / 4)
    assert x_norm(f, SpaceParams(2, a0, 1.0)) == pytest.approx(expected, rel=1e-6)


def _random_fn(grid, seed):
    rng = np.random.default_rng(seed)
    a, b, c = rng.uniform(0.2, 3, 3)
    return GridFunction.from_callable(grid, lambda r: a * np.exp(-b * r**c) - 0.3 * np.exp(-r))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([-2.0, 0.5, 10.0]), st.floats(1.1, 4.0), st.floats(-0.5, 2.0))
def test_homogeneity(seed, c, p, alpha):
    g = RadialGrid(1e-8, 1e6, 512)
    f = _random_fn(g, seed)
    assert lp_norm(c * f, p, alpha) == pytest.approx(abs(c) * lp_norm(f, p, alpha), rel=1e-12)
    sp = SpaceParams(p, alpha)
    assert x_norm(c * f, sp) == pytest.approx(abs(c) * x_norm(f, sp), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 10_000), st.floats(1.0, 5.0))
def test_triangle(s1, s2, p):
    g = RadialGrid(1e-8, 1e6, 512)
    f, h = _random_fn(g, s1), _random_fn(g, s2)
    assert lp_norm(f + h, p, 0.3) <= lp_norm(f, p, 0.3) + lp_norm(h, p, 0.3) + 1e-10


def test_normalize_scale_invariant(grid):
    sp = SpaceParams(2.5, 0.0)
    f = _random_fn(grid, 3)
    assert x_norm(normalize(f, sp), sp) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(normalize(5 * f, sp).values, normalize(f, sp).values, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_radial_decay_bound_exp(grid, p):
    sp = SpaceParams(p, 0.0)
    f = GridFunction.from_callable(grid, lambda r: np.exp(-r))
    assert np.all(np.abs(f.values) <= 1.001 * radial_decay_bound(f, sp))


def test_space_params():
    sp = SpaceParams(3.0, 1.0)
    assert sp.alpha1 == 2.0 and sp.theta == 1.0
    assert sp.p_prime == pytest.approx(1.5)
    assert sp.p_star == math.inf
    assert SpaceParams(2.0, 0.0, alpha1=1.5).p_star == pytest.approx(4.0)
    with pytest.raises(ValueError):
        SpaceParams(1.0, 0.0)
    with pytest.raises(ValueError):
        SpaceParams(2.0, -1.0)


def test_csv_roundtrip(tmp_path, small_grid):
    f = _random_fn(small_grid, 7)
    path = tmp_path / "u.csv"
    write_csv(f, path)
    back = read_csv(path)
    assert back.grid == small_grid
    assert np.array_equal(back.values, f.values)
    path.write_text("r,u\n1,0\n2,0\n5,0\n" + "".join(f"{10 + k},0\n" for k in range(20)))
    with pytest.raises(ValueError):
        read_csv(path)
