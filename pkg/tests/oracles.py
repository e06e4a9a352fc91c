"""Independent reference computations shared by the test modules."""

import numpy as np

from tmlab.families import ExpPowerFamily, Scaled
from tmlab.functional import TMConfig, tm_gradient_array, tm_value_array
from tmlab.grid import SpaceParams


def central_difference_gradient_error(u, grid, cfg, rng, n_nodes=20):
    """Max relative error of the analytic gradient against central differences.

    Nodes are drawn among those carrying a non-negligible gradient, so the
    comparison is not swamped by rounding in the difference quotient.
    """
    g = tm_gradient_array(u, grid, cfg)
    candidates = np.flatnonzero(np.abs(g) >= 1e-2 * np.max(np.abs(g)))
    nodes = rng.choice(candidates, size=min(n_nodes, candidates.size), replace=False)
    h = 1e-6 * np.max(np.abs(u))
    worst = 0.0
    for i in nodes:
        up, um = u.copy(), u.copy()
        up[i] += h
        um[i] -= h
        fd = (tm_value_array(up, grid, cfg) - tm_value_array(um, grid, cfg)) / (2 * h)
        worst = max(worst, abs(fd - g[i]) / abs(g[i]))
    return worst


def random_tm_case(rng, grid):
    p = float(rng.uniform(1.5, 3.5))
    alpha0 = float(rng.uniform(-0.5, 1.5))
    sp = SpaceParams(p, alpha0)
    cfg = TMConfig(float(rng.uniform(0.1, 0.9)) * (alpha0 + 1), sp)
    prof = Scaled(ExpPowerFamily(float(rng.uniform(0.7, 2.5))), float(rng.uniform(0.3, 1.5)),
                  float(rng.uniform(0.5, 2.0)))
    return prof.sample(grid).values, cfg
