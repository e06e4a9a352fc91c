import math

import numpy as np
import pytest

from tmlab.families import ExpPowerFamily
from tmlab.functional import TMConfig, curve_derivative_I, tm_functional, weinstein_quotient
from tmlab.grid import RadialGrid, SpaceParams, derivative_norm, lp_norm, normalize, x_norm
from tmlab.optimize import (AscentConfig, blowup_scan, gamma_family_max, golden_section_max, maximize_tm,
                            maximize_tm_multistart, maximize_weinstein, nonattain_suite, nonattain_trials,
                            unit_norm_rescale, vanishing_scan)

COARSE = RadialGrid(1e-8, 1e6, 1024)


@pytest.mark.parametrize("kwargs", [dict(step0=0), dict(backtrack=1.0), dict(backtrack=0.0), dict(grad_tol=0),
                                    dict(max_iter=0)])
def test_ascent_config_validation(kwargs):
    with pytest.raises(ValueError):
        AscentConfig(**kwargs)


@pytest.mark.parametrize("alpha0", [-0.5, 0.0, 1.0, 2.3])
def test_gamma_family_max(alpha0):
    res = gamma_family_max(alpha0)
    assert res.gamma_star == pytest.approx((alpha0 + 1) * math.log(2), abs=1e-6)
    assert res.value == pytest.approx(4 / ((alpha0 + 1) * math.e * math.log(2)), abs=1e-8)
    assert res.value > 2 / (alpha0 + 1)
    f = lambda g: 2 ** (2 - (alpha0 + 1) / g) / g  # noqa: E731
    assert f(res.gamma_star) >= max(f(res.gamma_star - 0.1), f(res.gamma_star + 0.1))


def test_golden_section_quadratic():
    assert golden_section_max(lambda x: -(x - 1.234) ** 2 + 5, 0.0, 3.0) == pytest.approx(1.234, abs=1e-6)


def test_maximize_tm_small_grid():
    sp = SpaceParams(2.5, 0.0)
    cfg = TMConfig(0.5, sp)
    res = maximize_tm(cfg, grid=COARSE)
    assert res.converged and res.tangential_grad_norm <= 1e-7
    assert res.value > cfg.vanishing_level + 1e-3
    assert x_norm(res.maximizer, sp) == pytest.approx(1.0, abs=1e-8)
    assert np.all(res.maximizer.values >= 0)
    assert all(b >= a for a, b in zip(res.history, res.history[1:]))
    assert tm_functional(res.maximizer, cfg) == pytest.approx(res.value, rel=1e-12)


def test_maximize_tm_warm_start_and_multistart():
    cfg = TMConfig(0.5, SpaceParams(2.5, 0.0))
    runs = maximize_tm_multistart(cfg, AscentConfig(seed=3), n_starts=3, grid=COARSE)
    values = [r.value for r in runs]
    assert max(values) - min(values) <= 1e-6
    warm = maximize_tm(cfg, init=runs[0].maximizer)
    assert warm.iterations <= 2 and warm.converged


def test_maximize_tm_takes_abs_of_init():
    cfg = TMConfig(0.5, SpaceParams(2.5, 0.0))
    init = -1.0 * ExpPowerFamily(1.0).sample(COARSE)
    res = maximize_tm(cfg, init=init)
    assert np.all(res.maximizer.values >= 0)


def test_maximize_tm_refuses_supercritical():
    with pytest.raises(ValueError):
        maximize_tm(TMConfig(1.0, SpaceParams(2.5, 0.0)), grid=COARSE)


def test_maximize_tm_nonconvergence_reported():
    cfg = TMConfig(0.5, SpaceParams(2.5, 0.0))
    res = maximize_tm(cfg, AscentConfig(max_iter=2), grid=COARSE)
    assert not res.converged
    assert res.to_dict()["converged"] is False


def test_unit_norm_rescale(grid):
    u = 3.0 * ExpPowerFamily(1.7).sample(grid)
    v = unit_norm_rescale(u, 2.0, 0.0, 1.0)
    assert lp_norm(v, 2, 0) == pytest.approx(1.0, abs=1e-8)
    assert derivative_norm(v, 2, 1) == pytest.approx(1.0, abs=1e-8)
    assert weinstein_quotient(v, 2, 4, 0, 1) == pytest.approx(weinstein_quotient(u, 2, 4, 0, 1), rel=1e-4)


@pytest.mark.parametrize("alpha0", [0.0, 1.0])
def test_weinstein_dominates_family(alpha0):
    res = maximize_weinstein(2.0, 4.0, alpha0, 1.0, grid=COARSE)
    assert res.converged
    assert res.value >= gamma_family_max(alpha0).value - 1e-3


def test_weinstein_window():
    with pytest.raises(ValueError):
        maximize_weinstein(2.0, 1.0, 0.0, 1.0, grid=COARSE)


def test_blowup_single_and_saturation():
    cfg = TMConfig(1.2, SpaceParams(2.0, 0.0, theta=0.0))
    single = blowup_scan(cfg, [10.0], grid=COARSE)
    assert len(single) == 1 and single[0].n == 10.0
    pts = blowup_scan(cfg, [10.0, 1e30], grid=RadialGrid(1e-40, 1e6, 2048))
    assert pts[1].log_value > pts[0].log_value
    with pytest.raises(ValueError):
        blowup_scan(cfg, [100.0, 10.0], grid=COARSE)


def test_blowup_subcritical_bounded():
    cfg = TMConfig(0.8, SpaceParams(2.0, 0.0, theta=0.0))
    pts = blowup_scan(cfg, [1e2, 1e3, 1e4])
    assert pts[-1].value <= 1.1 * pts[0].value


def test_vanishing_scan_limit():
    cfg = TMConfig(0.5, SpaceParams(2.0, 0.0))
    pts = vanishing_scan(cfg, [2.0**-n for n in (1, 12, 15)])
    assert pts[-1].value == pytest.approx(0.5, rel=0.02)
    assert abs(pts[1].value - 0.5) < abs(pts[0].value - 0.5)


def test_nonattain_suite():
    rec = nonattain_suite(2.0, 0.0, 0.01, 20, 0, grid=COARSE)
    assert rec.all_negative and rec.worst_I < 0
    assert len(rec.values) == 20
    with pytest.raises(ValueError):
        nonattain_suite(2.5, 0.0, 0.01, 5, 0)
    with pytest.raises(ValueError):
        nonattain_suite(2.0, 0.0, 0.5, 5, 0)


def test_nonattain_single_exp_trial(grid):
    sp = SpaceParams(2.0, 0.0)
    v = normalize(ExpPowerFamily(1.0).sample(grid), sp)
    assert curve_derivative_I(v, 0.01, sp) < 0


def test_nonattain_trials_deterministic():
    sp = SpaceParams(2.0, 0.0)
    a = nonattain_trials(2.0, sp, 6, 11, COARSE)
    b = nonattain_trials(2.0, sp, 6, 11, COARSE)
    for (ka, pa), (kb, pb) in zip(a, b):
        assert ka == kb
        assert np.array_equal(pa.sample(COARSE).values, pb.sample(COARSE).values)
        assert x_norm(pa.sample(COARSE), sp) == pytest.approx(1.0, abs=1e-8)
