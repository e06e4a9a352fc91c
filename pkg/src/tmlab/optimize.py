"""Maximization on the unit sphere of X^{1,p} and one-parameter scans.

Both extremal problems use the same scheme: a gradient step preconditioned
by the local p-Laplacian-type metric of the X-norm, Barzilai-Borwein step
lengths measured in that metric, and backtracking so that every accepted
step does not decrease the objective.  For the Trudinger-Moser functional
the step is taken in the tangent space of the constraint and followed by
renormalization.  The Weinstein quotient is invariant under amplitude and
dilation, so it is maximized without a constraint and rescaled afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sparse
from scipy.sparse.linalg import splu

from .families import (ExpPowerFamily, Mixture, MoserProfile, Profile, Scaled, VanishingFamily,
                       random_profile, scale_lambda_mu)
from .functional import (TMConfig, curve_derivative_I, tm_functional, tm_gradient_array,
                         tm_value_array, weinstein_log_and_grad, weinstein_quotient,
                         _check_weinstein_window)
from .grid import (GridFunction, RadialGrid, SpaceParams, default_grid, derivative_norm, lp_norm,
                   midpoint_derivative_matrix, normalize, sample_integral,
                   sample_integral_weights, seminorm_pow_grad, x_norm)
from .specfn import LogValue

__all__ = [
    "AscentConfig",
    "BlowupPoint",
    "ExtremalResult",
    "GammaFamilyMax",
    "NonattainRecord",
    "VanishingPoint",
    "blowup_scan",
    "gamma_family_max",
    "golden_section_max",
    "maximize_tm",
    "maximize_tm_multistart",
    "maximize_weinstein",
    "nonattain_suite",
    "nonattain_trials",
    "random_init",
    "unit_norm_rescale",
    "vanishing_grid",
    "vanishing_scan",
]

_METRIC_FLOOR = 1e-6
_STEP_RANGE = (1e-12, 1e12)


@dataclass(frozen=True)
class AscentConfig:
    step0: float = 0.1
    backtrack: float = 0.5
    max_iter: int = 5000
    grad_tol: float = 1e-7
    seed: int = 0

    def __post_init__(self):
        if not self.step0 > 0:
            raise ValueError("step0 must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")


@dataclass
class ExtremalResult:
    maximizer: GridFunction
    value: float
    iterations: int
    converged: bool
    tangential_grad_norm: float
    history: list[float] = field(default_factory=list, repr=False)
    message: str = ""

    def to_dict(self) -> dict:
        return {"value": self.value, "iterations": self.iterations, "converged": self.converged,
                "tangential_grad_norm": self.tangential_grad_norm, "message": self.message,
                "grid": self.maximizer.grid.to_dict()}


def _floored_power(a: np.ndarray, expo: float) -> np.ndarray:
    floor = _METRIC_FLOOR * a.max(initial=0.0)
    return np.maximum(a, floor if floor > 0 else 1.0) ** expo


def _sobolev_metric(u, du, w0, wm, S, p, c0=1.0, c1=1.0):
    """diag(w0 |u|^(p-2)) / c0 + S^T diag(wm |u'|^(p-2)) S / c1, floored near zero.

    For p = 2 this is the Gram matrix of the discrete X inner product.
    """
    m = sparse.diags(np.abs(w0) * _floored_power(np.abs(u), p - 2.0) / c0)
    m = m + S.T @ sparse.diags(np.abs(wm) * _floored_power(np.abs(du), p - 2.0) / c1) @ S
    return m.tocsc()


class _SphereNorm:
    """N(u) = |u|_X^p on a grid, with gradient and metric data."""

    def __init__(self, grid: RadialGrid, sp: SpaceParams):
        self.grid, self.sp = grid, sp
        self.S = midpoint_derivative_matrix(grid)

    def value(self, u):
        p = self.sp.p
        return (sample_integral(np.abs(u) ** p, self.grid, self.sp.alpha0)
                + seminorm_pow_grad(u, self.grid, p, self.sp.alpha1)[0])

    def normalize(self, u):
        return u / self.value(u) ** (1.0 / self.sp.p)

    def grad_and_metric(self, u):
        p = self.sp.p
        fp = np.abs(u) ** p
        w0 = sample_integral_weights(fp, self.grid, self.sp.alpha0)
        _, gb, du, wm = seminorm_pow_grad(u, self.grid, p, self.sp.alpha1)
        grad = w0 * p * np.abs(u) ** (p - 1.0) * np.sign(u) + gb
        return grad, _sobolev_metric(u, du, w0, wm, self.S, p)


def _bb_step(s, y, metric, current):
    """Barzilai-Borwein length <s, M s> / <s, -y> for an ascent; keeps ``current``
    when the curvature estimate has the wrong sign."""
    sy = -float(s @ y)
    if sy <= 0:
        return current
    return float(np.clip(float(s @ (metric @ s)) / sy, *_STEP_RANGE))


def _value_key(v):
    return -math.inf if isinstance(v, LogValue) else v


def maximize_tm(cfg: TMConfig, ascent: AscentConfig = AscentConfig(), init: GridFunction | None = None,
                grid: RadialGrid | None = None) -> ExtremalResult:
    """Maximize the Trudinger-Moser functional over the unit sphere of X^{1,p}(alpha0, alpha1)."""
    sp = cfg.sp
    if cfg.mu >= sp.alpha0 + 1.0 or not cfg.subcritical:
        raise ValueError(f"mu={cfg.mu} is not subcritical; use blowup_scan instead")
    if init is None:
        init = ExpPowerFamily(1.0).sample(grid or default_grid())
    grid = init.grid
    if not np.any(init.values):
        raise ValueError("initial function must not vanish identically")
    sphere = _SphereNorm(grid, sp)

    u = sphere.normalize(np.abs(init.values))
    f = tm_value_array(u, grid, cfg)
    history = [f]
    tau = ascent.step0
    prev = None
    gnorm = math.inf
    converged = False
    message = "maximum iterations reached"
    it = 0
    for it in range(ascent.max_iter + 1):
        g = tm_gradient_array(u, grid, cfg)
        gn, metric = sphere.grad_and_metric(u)
        lu = splu(metric)
        d = lu.solve(g)
        nvec = lu.solve(gn)
        lam = float(gn @ d) / float(gn @ nvec)
        lagr = g - lam * gn
        d_t = lu.solve(lagr)
        gnorm = math.sqrt(max(float(lagr @ d_t), 0.0))
        if gnorm <= ascent.grad_tol:
            converged, message = True, "tangential gradient below tolerance"
            break
        if it == ascent.max_iter:
            break
        if prev is not None:
            tau = _bb_step(u - prev[0], lagr - prev[1], metric, tau)
        while True:
            # the functional is even, so folding onto u >= 0 loses nothing
            cand = sphere.normalize(np.abs(u + tau * d_t))
            fc = tm_value_array(cand, grid, cfg)
            if _value_key(fc) >= f:
                break
            tau *= ascent.backtrack
            if tau < _STEP_RANGE[0]:
                cand = None
                break
        if cand is None:
            message = "line search failed to increase the functional"
            break
        prev = (u, lagr)
        u, f = cand, fc
        history.append(f)
    return ExtremalResult(GridFunction(grid, u), float(f), it, converged, gnorm, history, message)


def random_init(rng: np.random.Generator, grid: RadialGrid) -> GridFunction:
    """A positive mixture of two or three exp-power bumps of random width."""
    terms = []
    for _ in range(int(rng.integers(2, 4))):
        gam = float(rng.uniform(0.7, 2.5))
        dil = math.exp(rng.uniform(math.log(0.3), math.log(3.0)))
        terms.append((float(rng.uniform(0.2, 1.0)), Scaled(ExpPowerFamily(gam), 1.0, dil)))
    return Mixture(tuple(terms)).sample(grid)


def maximize_tm_multistart(cfg: TMConfig, ascent: AscentConfig = AscentConfig(), n_starts: int = 3,
                           grid: RadialGrid | None = None) -> list[ExtremalResult]:
    """Independent runs from seeded random initial profiles; seeds ascent.seed + k."""
    grid = grid or default_grid()
    out = []
    for k in range(n_starts):
        rng = np.random.default_rng(ascent.seed + k)
        out.append(maximize_tm(cfg, ascent, random_init(rng, grid)))
    return out


def unit_norm_rescale(u: GridFunction, p: float, alpha0: float, alpha1: float,
                      tol: float = 1e-9, max_passes: int = 30) -> GridFunction:
    """Amplitude/dilation change making |u|_{L^p_alpha0} = |u'|_{L^p_alpha1} = 1.

    The grid resampling is inexact, so the closed-form factors are applied
    repeatedly until both norms are within ``tol`` of one.
    """
    den = alpha0 + p - alpha1
    v = u
    for _ in range(max_passes):
        a = lp_norm(v, p, alpha0)
        b = derivative_norm(v, p, alpha1)
        if abs(a - 1.0) <= tol and abs(b - 1.0) <= tol:
            return v
        lam = a ** ((alpha1 - p + 1.0) / den) / b ** ((alpha0 + 1.0) / den)
        mu_scale = (a / b) ** (p / den)
        v = scale_lambda_mu(v, lam, mu_scale)
    return v


def maximize_weinstein(p: float, q: float, alpha0: float, alpha1: float,
                       ascent: AscentConfig = AscentConfig(), grid: RadialGrid | None = None,
                       init: GridFunction | None = None) -> ExtremalResult:
    """Maximize the interpolation quotient J; returns a maximizer with unit
    Lebesgue norm and unit derivative norm."""
    _check_weinstein_window(p, q, alpha0, alpha1)
    if init is None:
        init = ExpPowerFamily(1.0).sample(grid or default_grid())
    grid = init.grid
    S = midpoint_derivative_matrix(grid)

    def unit(u):
        return u / sample_integral(np.abs(u) ** p, grid, alpha0) ** (1.0 / p)

    def evaluate(u):
        return weinstein_log_and_grad(u, grid, p, q, alpha0, alpha1)

    u = unit(np.abs(init.values))
    logj, g, (_, B, C), (du, wm) = evaluate(u)
    history = [math.exp(logj)]
    tau = ascent.step0
    prev = None
    gnorm = math.inf
    converged = False
    message = "maximum iterations reached"
    it = 0
    for it in range(ascent.max_iter + 1):
        w0 = sample_integral_weights(np.abs(u) ** p, grid, alpha0)
        metric = _sobolev_metric(u, du, w0, wm, S, p, C, B)
        d = splu(metric).solve(g)
        gnorm = math.sqrt(max(float(g @ d), 0.0))
        if gnorm <= ascent.grad_tol:
            converged, message = True, "gradient below tolerance"
            break
        if it == ascent.max_iter:
            break
        if prev is not None:
            tau = _bb_step(u - prev[0], g - prev[1], metric, tau)
        while True:
            cand = unit(np.abs(u + tau * d))
            lc, gc, parts, mdata = evaluate(cand)
            if lc >= logj:
                break
            tau *= ascent.backtrack
            if tau < _STEP_RANGE[0]:
                cand = None
                break
        if cand is None:
            message = "line search failed to increase the quotient"
            break
        prev = (u, g)
        u, logj, g = cand, lc, gc
        (_, B, C), (du, wm) = parts, mdata
        history.append(math.exp(logj))
    u0 = unit_norm_rescale(GridFunction(grid, np.abs(u)), p, alpha0, alpha1)
    value = weinstein_quotient(u0, p, q, alpha0, alpha1)
    return ExtremalResult(u0, value, it, converged, gnorm, history, message)


@dataclass(frozen=True)
class GammaFamilyMax:
    gamma_star: float
    value: float


def golden_section_max(fn, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 500):
    """Maximizer of a unimodal ``fn`` on [lo, hi] by golden-section search."""
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv * (b - a)
    d = a + inv * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def gamma_family_max(alpha0: float, lo: float = 1e-3, hi: float = 1e3) -> GammaFamilyMax:
    """Best exp-power lower bound for the p=2, q=4 quotient: max of 2^(2-(alpha0+1)/gamma)/gamma.

    The search runs on log(gamma) and the log of the objective.
    """
    if not alpha0 > -1:
        raise ValueError(f"alpha0 must exceed -1, got {alpha0}")
    k = alpha0 + 1.0

    def logf(x):
        return (2.0 - k * math.exp(-x)) * math.log(2.0) - x

    x = golden_section_max(logf, math.log(lo), math.log(hi), tol=1e-12)
    gam = math.exp(x)
    return GammaFamilyMax(gam, 2.0 ** (2.0 - k / gam) / gam)


@dataclass(frozen=True)
class BlowupPoint:
    n: float
    value: float | LogValue

    @property
    def saturated(self) -> bool:
        return isinstance(self.value, LogValue)

    @property
    def log_value(self) -> float:
        return self.value.log_value if self.saturated else math.log(self.value)


def blowup_scan(cfg: TMConfig, n_values, grid: RadialGrid | None = None) -> list[BlowupPoint]:
    """Functional along normalized Moser profiles; never raises on overflow."""
    grid = grid or default_grid()
    n_values = [float(n) for n in n_values]
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("n_values must be increasing")
    out = []
    for n in n_values:
        m = normalize(MoserProfile(n, cfg.sp.p).sample(grid), cfg.sp)
        out.append(BlowupPoint(n, tm_functional(m, cfg)))
    return out


@dataclass(frozen=True)
class VanishingPoint:
    gamma_n: float
    value: float
    n_nodes: int
    r_max: float


def vanishing_grid(vf: VanishingFamily, base: RadialGrid) -> RadialGrid:
    """Base grid extended to twice the support of ``vf`` at no coarser log step."""
    r_max = max(base.r_max, 2.0 * vf.support)
    if r_max == base.r_max:
        return base
    n = math.ceil((math.log(r_max) - math.log(base.r_min)) / base.log_step) + 1
    return RadialGrid(base.r_min, r_max, n)


def vanishing_scan(cfg: TMConfig, gamma_list, grid: RadialGrid | None = None) -> list[VanishingPoint]:
    """Functional along the normalized vanishing family psi_n."""
    base = grid or default_grid()
    sp = cfg.sp
    out = []
    for gam in gamma_list:
        vf = VanishingFamily(float(gam), sp.p, sp.alpha0)
        g = vanishing_grid(vf, base)
        val = tm_functional(normalize(vf.sample(g), sp), cfg)
        out.append(VanishingPoint(float(gam), float(val), g.n_nodes, g.r_max))
    return out


@dataclass
class NonattainRecord:
    all_negative: bool
    worst_I: float
    values: list[float] = field(default_factory=list, repr=False)
    kinds: list[str] = field(default_factory=list, repr=False)
    regime: str = ""


_TRIAL_KINDS = ("exp-power", "mixture", "moser")


def nonattain_trials(p: float, sp: SpaceParams, n_trials: int, seed: int, grid: RadialGrid,
                     kinds=_TRIAL_KINDS) -> list[tuple[str, Profile]]:
    """Seeded trial profiles scaled to unit X-norm on ``grid``."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_trials):
        kind = kinds[int(rng.integers(len(kinds)))]
        prof = random_profile(rng, p, kind)
        out.append((kind, prof.scaled(1.0 / x_norm(prof.sample(grid), sp))))
    return out


def nonattain_suite(p: float, alpha0: float, mu: float, n_trials: int, seed: int,
                    grid: RadialGrid | None = None) -> NonattainRecord:
    """Sign of the derivative of the functional along the scaling curve through random unit trials."""
    if not 1 < p <= 2:
        raise ValueError(f"need 1 < p <= 2, got {p}")
    if not 0 < mu <= 0.01 * (alpha0 + 1.0):
        raise ValueError("tested regime is 0 < mu <= 0.01 (alpha0 + 1)")
    grid = grid or default_grid()
    sp = SpaceParams(p, alpha0)
    values, kinds = [], []
    for kind, prof in nonattain_trials(p, sp, n_trials, seed, grid):
        values.append(curve_derivative_I(prof.sample(grid), mu, sp))
        kinds.append(kind)
    worst = max(values) if values else -math.inf
    return NonattainRecord(all(v < 0 for v in values), worst, values, kinds,
                           regime=f"mu <= 0.01 (alpha0 + 1) = {0.01 * (alpha0 + 1.0)}")
