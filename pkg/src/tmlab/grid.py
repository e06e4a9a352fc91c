"""Log-uniform radial grids, weighted quadrature, derivatives and norms.

Functions on (0, inf) are sampled at nodes r_i = exp(s_i) with s_i equally
spaced.  Integrals use the trapezoid rule in s on f(r) r**(theta+1), plus
an extrapolated head on (0, r_min] and nothing beyond r_max.  Pointwise
derivatives are central differences in s divided by r; derivative norms
use staggered differences at the cell midpoints.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np
import scipy.sparse as sparse

__all__ = [
    "DEFAULT_GRID",
    "GridFunction",
    "RadialGrid",
    "SpaceParams",
    "default_grid",
    "derivative",
    "derivative_matrix",
    "derivative_norm",
    "head_integral",
    "lp_norm",
    "midpoint_derivative_matrix",
    "midpoint_weights",
    "midpoints",
    "make_grid",
    "normalize",
    "quadrature_weights",
    "radial_decay_bound",
    "read_csv",
    "sample_integral",
    "sample_integral_weights",
    "seminorm_pow",
    "seminorm_pow_grad",
    "weighted_integral",
    "write_csv",
    "x_norm",
]

MIN_NODES = 16
DEFAULT_GRID = (1e-8, 1e6, 4096)
GRID_NODES_ENV = "TMLAB_GRID_NODES"


@dataclass(frozen=True)
class RadialGrid:
    r_min: float = DEFAULT_GRID[0]
    r_max: float = DEFAULT_GRID[1]
    n_nodes: int = DEFAULT_GRID[2]

    def __post_init__(self):
        if not (0 < self.r_min < self.r_max) or not math.isfinite(self.r_max):
            raise ValueError(f"need 0 < r_min < r_max, got {self.r_min}, {self.r_max}")
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < MIN_NODES:
            raise ValueError(f"n_nodes must be an integer >= {MIN_NODES}, got {self.n_nodes}")
        object.__setattr__(self, "r_min", float(self.r_min))
        object.__setattr__(self, "r_max", float(self.r_max))
        object.__setattr__(self, "n_nodes", int(self.n_nodes))

    @cached_property
    def log_nodes(self) -> np.ndarray:
        s = np.linspace(math.log(self.r_min), math.log(self.r_max), self.n_nodes)
        s.flags.writeable = False
        return s

    @cached_property
    def nodes(self) -> np.ndarray:
        r = np.exp(self.log_nodes)
        r[0], r[-1] = self.r_min, self.r_max
        r.flags.writeable = False
        return r

    @property
    def log_step(self) -> float:
        return (math.log(self.r_max) - math.log(self.r_min)) / (self.n_nodes - 1)

    def __len__(self) -> int:
        return self.n_nodes

    def to_dict(self) -> dict:
        return {"r_min": self.r_min, "r_max": self.r_max, "n_nodes": self.n_nodes,
                "log_step": self.log_step}


def make_grid(r_min: float, r_max: float, n_nodes: int) -> RadialGrid:
    return RadialGrid(r_min, r_max, n_nodes)


def default_grid() -> RadialGrid:
    """The default grid, with the node count overridable via ``TMLAB_GRID_NODES``."""
    n = os.environ.get(GRID_NODES_ENV)
    return RadialGrid(DEFAULT_GRID[0], DEFAULT_GRID[1], int(n) if n else DEFAULT_GRID[2])


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: RadialGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n_nodes,):
            raise ValueError(f"expected {self.grid.n_nodes} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: RadialGrid, fn) -> "GridFunction":
        return cls(grid, fn(grid.nodes))

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise ValueError("grid functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return GridFunction(self.grid, self.values / c)

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __abs__(self):
        return GridFunction(self.grid, np.abs(self.values))


@dataclass(frozen=True)
class SpaceParams:
    """Exponents of X^{1,p}(alpha0, alpha1) and the target weight theta.

    ``alpha1`` defaults to p - 1 and ``theta`` to ``alpha0``.
    """

    p: float
    alpha0: float
    alpha1: float | None = None
    theta: float | None = None

    def __post_init__(self):
        if self.alpha1 is None:
            object.__setattr__(self, "alpha1", self.p - 1.0)
        if self.theta is None:
            object.__setattr__(self, "theta", self.alpha0)
        if not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if not self.alpha0 > -1:
            raise ValueError(f"alpha0 must exceed -1, got {self.alpha0}")
        if not self.theta > -1:
            raise ValueError(f"theta must exceed -1, got {self.theta}")
        if self.alpha0 < self.alpha1 - self.p:
            raise ValueError("need alpha0 >= alpha1 - p")

    @property
    def p_prime(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def p_star(self) -> float:
        gap = self.alpha1 - self.p + 1.0
        return (self.theta + 1.0) * self.p / gap if gap > 0 else math.inf

    @property
    def mu0(self) -> float:
        return self.theta + 1.0

    def to_dict(self) -> dict:
        return {"p": self.p, "alpha0": self.alpha0, "alpha1": self.alpha1, "theta": self.theta}


@lru_cache(maxsize=64)
def quadrature_weights(grid: RadialGrid, theta: float) -> np.ndarray:
    """Trapezoid weights in s: sum(w * f) integrates f(r) r**theta over [r_min, r_max]."""
    if not theta > -1:
        raise ValueError(f"theta must exceed -1, got {theta}")
    w = grid.log_step * grid.nodes ** (theta + 1.0)
    w[0] *= 0.5
    w[-1] *= 0.5
    w.flags.writeable = False
    return w


def head_integral(f3, rho0: float, edge: float, step: float, theta: float):
    """Integral of f(r) r**theta over (0, edge] from three samples at rho0 * e**(k step).

    The samples are fitted by A + B r**kappa, which is exact for constants
    and for the power-law behavior of smooth and cusp-like profiles at the
    origin.  Degenerate fits fall back to the constant f(rho0).  Accepts
    complex input so that callers can differentiate by complex step.
    """
    c = theta + 1.0
    f0, f1, f2 = f3[0], f3[1], f3[2]
    constant = f0 * edge**c / c
    d1, d2 = f1 - f0, f2 - f1
    scale = max(abs(f0.real), abs(f1.real), abs(f2.real))
    if scale == 0 or abs(d1.real) <= 1e-5 * scale or d1.real * d2.real <= 0:
        return constant
    ratio = d2 / d1
    kappa = np.log(ratio) / step
    if not (abs(kappa.real) > 1e-3 and kappa.real + c > 0.05 and abs(kappa.real) < 50):
        return constant
    b_at_rho = d1 / (ratio - 1.0)
    a = f0 - b_at_rho
    return a * edge**c / c + b_at_rho * (edge / rho0) ** kappa * edge**c / (kappa + c)


def _head_gradient(f3: np.ndarray, rho0: float, edge: float, step: float, theta: float) -> np.ndarray:
    eps = 1e-20 * max(np.abs(f3).max(), 1e-280)
    out = np.empty(3)
    for k in range(3):
        z = f3.astype(complex)
        z[k] += 1j * eps
        out[k] = np.imag(head_integral(z, rho0, edge, step, theta)) / eps
    return out


def sample_integral(values: np.ndarray, grid: RadialGrid, theta: float) -> float:
    """Integral over (0, r_max] of the function with nodal ``values`` times r**theta."""
    w = quadrature_weights(grid, float(theta))
    return float(w @ values) + float(head_integral(values[:3], grid.r_min, grid.r_min, grid.log_step, theta))


def sample_integral_weights(values: np.ndarray, grid: RadialGrid, theta: float) -> np.ndarray:
    """Derivative of :func:`sample_integral` with respect to each nodal value."""
    w = np.array(quadrature_weights(grid, float(theta)))
    w[:3] += _head_gradient(np.asarray(values[:3], dtype=float), grid.r_min, grid.r_min, grid.log_step, theta)
    return w


def weighted_integral(f: GridFunction, theta: float) -> float:
    if not theta > -1:
        raise ValueError(f"theta must exceed -1, got {theta}")
    return sample_integral(f.values, f.grid, float(theta))


_C6 = (np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0, range(-3, 4))
_C4 = (np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0, range(-2, 3))
_C2 = (np.array([-0.5, 0.0, 0.5]), range(-1, 2))
_LEFT = (np.array([-1.5, 2.0, -0.5]), range(0, 3))
_RIGHT = (np.array([0.5, -2.0, 1.5]), range(-2, 1))


@lru_cache(maxsize=16)
def _d_ds(grid: RadialGrid) -> sparse.csr_matrix:
    n = grid.n_nodes
    rows, cols, vals = [], [], []

    def put(i, stencil):
        coef, offsets = stencil
        rows.extend([i] * len(coef))
        cols.extend(i + o for o in offsets)
        vals.extend(coef)

    # sixth order in the bulk, dropping to second order toward the ends
    for i in range(n):
        depth = min(i, n - 1 - i)
        put(i, _LEFT if i == 0 else _RIGHT if i == n - 1 else
            _C2 if depth == 1 else _C4 if depth == 2 else _C6)
    d = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n)) / grid.log_step
    return d


@lru_cache(maxsize=16)
def derivative_matrix(grid: RadialGrid) -> sparse.csr_matrix:
    """Sparse G with G @ u approximating u'(r) at the nodes."""
    return sparse.diags(1.0 / grid.nodes) @ _d_ds(grid)


def derivative(f: GridFunction) -> GridFunction:
    return GridFunction(f.grid, derivative_matrix(f.grid) @ f.values)


_S6 = (np.array([3.0 / 640, -25.0 / 384, 75.0 / 64]), (3, 2, 1))
_S4 = (np.array([-1.0 / 24, 9.0 / 8]), (2, 1))
_S2 = (np.array([1.0]), (1,))


@lru_cache(maxsize=16)
def midpoint_derivative_matrix(grid: RadialGrid) -> sparse.csr_matrix:
    """Sparse (n-1) x n operator giving u' at the cell midpoints r_(i+1/2).

    Staggered differences have no odd-even null mode, unlike nodal central
    differences, so the seminorm they define controls grid-scale wiggles.
    """
    n = grid.n_nodes
    rows, cols, vals = [], [], []
    for i in range(n - 1):
        depth = min(i, n - 2 - i)
        coef, reach = _S2 if depth == 0 else _S4 if depth == 1 else _S6
        for c, k in zip(coef, reach):
            # c * (u[i + k] - u[i + 1 - k])
            rows.extend((i, i))
            cols.extend((i + k, i + 1 - k))
            vals.extend((c, -c))
    d = sparse.csr_matrix((vals, (rows, cols)), shape=(n - 1, n)) / grid.log_step
    return sparse.diags(1.0 / midpoints(grid)) @ d


@lru_cache(maxsize=16)
def midpoints(grid: RadialGrid) -> np.ndarray:
    s = grid.log_nodes
    m = np.exp(0.5 * (s[1:] + s[:-1]))
    m.flags.writeable = False
    return m


@lru_cache(maxsize=64)
def midpoint_weights(grid: RadialGrid, alpha: float) -> np.ndarray:
    w = grid.log_step * midpoints(grid) ** (alpha + 1.0)
    w.flags.writeable = False
    return w


def _mid_head_args(grid: RadialGrid):
    return midpoints(grid)[0], grid.r_min, grid.log_step


def seminorm_pow(values: np.ndarray, grid: RadialGrid, p: float, alpha: float) -> float:
    """Integral of |u'|**p r**alpha, using midpoint derivatives."""
    if not alpha > -1:
        raise ValueError(f"alpha must exceed -1, got {alpha}")
    g = np.abs(midpoint_derivative_matrix(grid) @ values) ** p
    rho0, edge, step = _mid_head_args(grid)
    return float(midpoint_weights(grid, float(alpha)) @ g) + float(head_integral(g[:3], rho0, edge, step, alpha))


def seminorm_pow_grad(values: np.ndarray, grid: RadialGrid, p: float, alpha: float):
    """``seminorm_pow`` and its gradient, plus the midpoint derivative and the
    effective midpoint weights (useful for building metrics)."""
    S = midpoint_derivative_matrix(grid)
    du = S @ values
    a = np.abs(du)
    g = a**p
    rho0, edge, step = _mid_head_args(grid)
    w = np.array(midpoint_weights(grid, float(alpha)))
    val = float(w @ g) + float(head_integral(g[:3], rho0, edge, step, alpha))
    w[:3] += _head_gradient(g[:3], rho0, edge, step, alpha)
    grad = S.T @ (w * p * a ** (p - 1.0) * np.sign(du))
    return val, grad, du, w


def derivative_norm(f: GridFunction, p: float, alpha: float) -> float:
    """|f'| in L^p_alpha."""
    return seminorm_pow(f.values, f.grid, p, alpha) ** (1.0 / p)


def lp_norm(f: GridFunction, p: float, alpha: float) -> float:
    if not p >= 1:
        raise ValueError(f"p must be at least 1, got {p}")
    return weighted_integral(GridFunction(f.grid, np.abs(f.values) ** p), alpha) ** (1.0 / p)


def x_norm(f: GridFunction, sp: SpaceParams) -> float:
    a = sample_integral(np.abs(f.values) ** sp.p, f.grid, sp.alpha0)
    b = seminorm_pow(f.values, f.grid, sp.p, sp.alpha1)
    return (a + b) ** (1.0 / sp.p)


def normalize(f: GridFunction, sp: SpaceParams) -> GridFunction:
    nrm = x_norm(f, sp)
    if not nrm > 0:
        raise ValueError("cannot normalize a function with zero X-norm")
    return GridFunction(f.grid, f.values / nrm)


def radial_decay_bound(f: GridFunction, sp: SpaceParams) -> np.ndarray:
    """Pointwise envelope p^(1/p) |u|^((p-1)/p) |u'|^(1/p) r^(-beta) from the space norms,
    with beta = (alpha0 (p-1) + alpha1) / p**2."""
    p = sp.p
    a = lp_norm(f, p, sp.alpha0)
    b = derivative_norm(f, p, sp.alpha1)
    beta = (sp.alpha0 * (p - 1.0) + sp.alpha1) / p**2
    return p ** (1.0 / p) * a ** ((p - 1.0) / p) * b ** (1.0 / p) * f.grid.nodes ** (-beta)


def write_csv(f: GridFunction, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "u"])
        for r, u in zip(f.grid.nodes, f.values):
            w.writerow([repr(float(r)), repr(float(u))])


def read_csv(path: str | os.PathLike, rel_tol: float = 1e-9) -> GridFunction:
    """Load a ``r,u`` CSV, rebuilding the grid and checking it is log-uniform."""
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["r", "u"]:
        raise ValueError("expected a header line 'r,u'")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=float)
    r, u = data[:, 0], data[:, 1]
    grid = RadialGrid(r[0], r[-1], len(r))
    if not np.allclose(r, grid.nodes, rtol=rel_tol, atol=0):
        raise ValueError("radius column is not log-uniformly spaced")
    return GridFunction(grid, u)
