"""Trudinger-Moser functional, Weinstein quotient and related ratios.

All functionals are evaluated with the grid quadrature.  The gradients are
exact gradients of the discrete functionals with respect to nodal values,
which is what the optimizers need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import specfn
from .grid import (GridFunction, RadialGrid, SpaceParams, derivative_norm, lp_norm,
                   quadrature_weights, sample_integral, sample_integral_weights, seminorm_pow_grad,
                   weighted_integral, x_norm)
from .specfn import LogValue

__all__ = [
    "TMConfig",
    "curve_derivative_I",
    "embedding_ratio",
    "gn_ratio",
    "scaling_curve_value",
    "tm_functional",
    "tm_gradient",
    "tm_gradient_array",
    "tm_value_array",
    "weinstein_exponents",
    "weinstein_log_and_grad",
    "weinstein_quotient",
]

_FLOAT_LOG_MAX = 709.0


@dataclass(frozen=True)
class TMConfig:
    """Coefficient mu and weight theta of the functional integral of exp_p(mu |u|^p') r^theta.

    ``theta`` defaults to ``sp.theta``.
    """

    mu: float
    sp: SpaceParams
    theta: float | None = None

    def __post_init__(self):
        if self.theta is None:
            object.__setattr__(self, "theta", self.sp.theta)
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.theta > -1:
            raise ValueError(f"theta must exceed -1, got {self.theta}")

    @property
    def subcritical(self) -> bool:
        return self.mu < self.theta + 1.0

    @property
    def vanishing_level(self) -> float:
        """mu^(p-1)/Gamma(p), the limit along normalized vanishing sequences."""
        return self.mu ** (self.sp.p - 1.0) / math.gamma(self.sp.p)

    def to_dict(self) -> dict:
        return {"mu": self.mu, "theta": self.theta, "sp": self.sp.to_dict()}


def tm_value_array(u: np.ndarray, grid: RadialGrid, cfg: TMConfig):
    """Discrete functional for raw nodal values; LogValue when it overflows."""
    p = cfg.sp.p
    theta = float(cfg.theta)
    t = cfg.mu * np.abs(u) ** cfg.sp.p_prime
    if t.max(initial=0.0) <= specfn.LOG_SPACE_THRESHOLD:
        val = sample_integral(specfn.exp_p_array(p, t), grid, theta)
        if math.isfinite(val):
            return val
    # saturated: only the sum of node contributions matters at this size
    with np.errstate(divide="ignore"):
        logs = np.log(quadrature_weights(grid, theta)) + specfn.log_exp_p(p, t)
    head = float(specfn.log_exp_p(p, t[0])) + (theta + 1.0) * math.log(grid.r_min) - math.log(theta + 1.0)
    total = float(logsumexp(np.append(logs, head)))
    return math.exp(total) if total < _FLOAT_LOG_MAX else LogValue(total)


def tm_functional(u: GridFunction, cfg: TMConfig):
    """Quadrature of exp_p(mu |u|^p') r^theta; a :class:`LogValue` past the float range."""
    return tm_value_array(u.values, u.grid, cfg)


def tm_gradient_array(u: np.ndarray, grid: RadialGrid, cfg: TMConfig) -> np.ndarray:
    p, pp, mu = cfg.sp.p, cfg.sp.p_prime, cfg.mu
    a = np.abs(u)
    t = mu * a**pp
    if t.max(initial=0.0) > specfn.LOG_SPACE_THRESHOLD:
        raise OverflowError("functional saturated; gradient is not representable")
    e = specfn.exp_p_array(p, t)
    w = sample_integral_weights(e, grid, float(cfg.theta))
    # mu p' a^(p'-1) exp_p'(t), with exp_p' = exp_p + t^(p-2)/Gamma(p-1), written so
    # the t^(p-2) singularity at a = 0 cancels against a^(p'-1)
    g = mu * pp * a ** (pp - 1.0) * e + p * mu ** (p - 1.0) * a ** (p - 1.0) / math.gamma(p)
    return w * np.sign(u) * g


def tm_gradient(u: GridFunction, cfg: TMConfig) -> GridFunction:
    return GridFunction(u.grid, tm_gradient_array(u.values, u.grid, cfg))


def weinstein_exponents(p: float, q: float, alpha0: float, alpha1: float) -> tuple[float, float]:
    """Exponents (a, b) of |u'| and |u| in the quotient denominator."""
    den = alpha0 + p - alpha1
    return (alpha0 + 1.0) * (q - p) / den, (p * (alpha0 + 1.0) - q * (alpha1 - p + 1.0)) / den


def _check_weinstein_window(p, q, alpha0, alpha1):
    if not p > 1:
        raise ValueError("need p > 1")
    if not alpha0 > alpha1 - p:
        raise ValueError("need alpha0 > alpha1 - p")
    gap = alpha1 - p + 1.0
    if q < p or (gap > 0 and not q < (alpha0 + 1.0) * p / gap):
        raise ValueError(f"q={q} outside the admissible window for p={p}, alpha0={alpha0}, alpha1={alpha1}")


def weinstein_quotient(u: GridFunction, p: float, q: float, alpha0: float, alpha1: float) -> float:
    """J(u) = |u|_q^q / (|u'|^a |u|^b), invariant under amplitude and dilation."""
    _check_weinstein_window(p, q, alpha0, alpha1)
    ea, eb = weinstein_exponents(p, q, alpha0, alpha1)
    num = weighted_integral(GridFunction(u.grid, np.abs(u.values) ** q), alpha0)
    nd = derivative_norm(u, p, alpha1)
    nu = lp_norm(u, p, alpha0)
    if nd == 0 or nu == 0:
        raise ValueError("quotient undefined: a denominator norm vanishes")
    return num / (nd**ea * nu**eb)


def weinstein_log_and_grad(u: np.ndarray, grid: RadialGrid, p, q, alpha0, alpha1):
    """log J and its gradient for raw nodal values.

    Also returns the integrals (A, B, C) = (|u|_q^q, |u'|_p^p, |u|_p^p) and
    the midpoint derivative data (du, midpoint weights) for metric assembly.
    """
    ea, eb = weinstein_exponents(p, q, alpha0, alpha1)
    au = np.abs(u)
    sgn = np.sign(u)
    fq, fp = au**q, au**p
    A = sample_integral(fq, grid, alpha0)
    C = sample_integral(fp, grid, alpha0)
    B, gB, du, wm = seminorm_pow_grad(u, grid, p, alpha1)
    gA = sample_integral_weights(fq, grid, alpha0) * q * au ** (q - 1.0) * sgn
    gC = sample_integral_weights(fp, grid, alpha0) * p * au ** (p - 1.0) * sgn
    logj = math.log(A) - ea / p * math.log(B) - eb / p * math.log(C)
    grad = gA / A - (ea / p) * gB / B - (eb / p) * gC / C
    return logj, grad, (A, B, C), (du, wm)


def curve_derivative_I(v: GridFunction, mu: float, sp: SpaceParams, truncation_J: int | None = None,
                       rel_cutoff: float = 1e-12, norm_tol: float = 1e-8) -> float:
    """d/dt at t=1 of the functional along w_t = v_t/|v_t|_X, by its series in j.

    Terms are added until one falls below ``rel_cutoff`` of the running sum;
    ``truncation_J`` caps the number of terms.
    """
    if abs(x_norm(v, sp) - 1.0) > norm_tol:
        raise ValueError("curve_derivative_I needs x_norm(v) = 1")
    p, pp = sp.p, sp.p_prime
    dnorm = derivative_norm(v, p, p - 1.0) ** p
    av = np.abs(v.values)
    cap = truncation_J if truncation_J is not None else 100000
    total = 0.0
    for j in range(cap):
        integral = sample_integral(av ** (pp * (p - 1.0 + j)), v.grid, sp.alpha0)
        coef = math.exp((p - 1.0 + j) * math.log(mu) - math.lgamma(p + j))
        term = coef * integral * (j / (p - 1.0) - (p - 1.0 + j) / (p - 1.0) * dnorm)
        total += term
        if j > 0 and abs(term) < rel_cutoff * abs(total):
            break
    return total


def scaling_curve_value(profile, t: float, mu: float, sp: SpaceParams, grid) -> float:
    """Functional at w_t = v_t / |v_t|_X for an analytic profile v, resampled exactly."""
    from .families import scale_vt
    from .grid import normalize

    vt = scale_vt(profile, t, sp).sample(grid)
    cfg = TMConfig(mu, sp, theta=sp.alpha0)
    return tm_functional(normalize(vt, sp), cfg)


def embedding_ratio(u: GridFunction, q: float, theta: float, sp: SpaceParams) -> float:
    """|u|_{L^q_theta} / |u|_X."""
    gap = sp.alpha1 - sp.p + 1.0
    if q < sp.p or (gap > 0 and q > (theta + 1.0) * sp.p / gap):
        raise ValueError(f"q={q} outside the embedding range")
    nrm = x_norm(u, sp)
    if nrm == 0:
        raise ValueError("embedding ratio undefined for the zero function")
    return lp_norm(u, q, theta) / nrm


def gn_ratio(u: GridFunction, q: float, mu: float, sp: SpaceParams) -> float:
    """|u|_q^q / (Gamma(q/p'+1) mu^(-q/p') |u'|^(q-p) |u|^p): bounded over the space
    with a constant depending only on mu."""
    p, pp = sp.p, sp.p_prime
    num = weighted_integral(GridFunction(u.grid, np.abs(u.values) ** q), sp.alpha0)
    nd = derivative_norm(u, p, p - 1.0)
    nu = lp_norm(u, p, sp.alpha0)
    if nd == 0 or nu == 0:
        raise ValueError("ratio undefined: a denominator norm vanishes")
    den = math.gamma(q / pp + 1.0) * mu ** (-q / pp) * nd ** (q - p) * nu**p
    return num / den
