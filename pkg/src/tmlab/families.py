"""Analytic trial functions and the dilation/amplitude scalings.

Every family here is a :class:`Profile`: a callable of the radius that can
be sampled on any grid.  Scaling a profile returns another profile, so
the scaled function is evaluated exactly rather than interpolated.
Scaling a :class:`GridFunction` falls back to log-linear interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from .grid import GridFunction, RadialGrid, SpaceParams

__all__ = [
    "Bump",
    "CutOff",
    "ExpPowerFamily",
    "ExpPowerNorms",
    "Mixture",
    "MoserProfile",
    "Profile",
    "Scaled",
    "VanishingFamily",
    "calibrated_bump",
    "cutoff_eta",
    "exp_power_exact_norms",
    "exp_power_sample",
    "moser_sample",
    "random_profile",
    "resample",
    "scale_lambda_mu",
    "scale_vt",
    "vanishing_sample",
]


class Profile:
    """A radial function given by a formula."""

    def __call__(self, r) -> np.ndarray:
        raise NotImplementedError

    def sample(self, grid: RadialGrid) -> GridFunction:
        return GridFunction(grid, self(grid.nodes))

    def scaled(self, amplitude: float = 1.0, dilation: float = 1.0) -> "Scaled":
        return Scaled(self, amplitude, dilation)


@dataclass(frozen=True)
class Scaled(Profile):
    """r -> amplitude * base(dilation * r)."""

    base: Profile
    amplitude: float = 1.0
    dilation: float = 1.0

    def __call__(self, r):
        return self.amplitude * self.base(self.dilation * np.asarray(r, dtype=float))

    def scaled(self, amplitude=1.0, dilation=1.0):
        return Scaled(self.base, self.amplitude * amplitude, self.dilation * dilation)


@dataclass(frozen=True)
class Mixture(Profile):
    terms: tuple[tuple[float, Profile], ...]

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return sum(c * prof(r) for c, prof in self.terms)


@dataclass(frozen=True)
class ExpPowerFamily(Profile):
    """u(r) = exp(-r**gamma)."""

    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    def __call__(self, r):
        return np.exp(-np.asarray(r, dtype=float) ** self.gamma)


@dataclass(frozen=True)
class ExpPowerNorms:
    l4_alpha0_pow4: float
    l2_alpha0_pow2: float
    l2_1_deriv_pow2: float

    @property
    def quotient(self) -> float:
        """|u|_4^4 / (|u'|^2 |u|^2), the interpolation quotient at p=2, q=4."""
        return self.l4_alpha0_pow4 / (self.l2_1_deriv_pow2 * self.l2_alpha0_pow2)


def exp_power_sample(fam: ExpPowerFamily, grid: RadialGrid) -> GridFunction:
    return fam.sample(grid)


def exp_power_exact_norms(fam: ExpPowerFamily, alpha0: float) -> ExpPowerNorms:
    if not alpha0 > -1:
        raise ValueError(f"alpha0 must exceed -1, got {alpha0}")
    g = fam.gamma
    k = (alpha0 + 1.0) / g
    base = math.gamma(k) / g
    return ExpPowerNorms(base / 4.0**k, base / 2.0**k, g / 4.0)


@dataclass(frozen=True)
class CutOff(Profile):
    """1 on [0, n), log(n e / r) on [n, n e), 0 beyond."""

    n: float

    def __post_init__(self):
        if not self.n >= 1:
            raise ValueError(f"cut-off needs n >= 1, got {self.n}")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.clip(np.log(self.n * math.e / r), 0.0, 1.0)


def cutoff_eta(n: float, grid: RadialGrid) -> GridFunction:
    return CutOff(n).sample(grid)


@dataclass(frozen=True)
class MoserProfile(Profile):
    """Truncated logarithm, constant (log n)**((p-1)/p) on (0, 1/n] and zero past 1.

    Its derivative has unit L^p_{p-1} norm for every n.
    """

    n: float
    p: float

    def __post_init__(self):
        if not self.n > 1:
            raise ValueError(f"Moser profile needs n > 1, got {self.n}")
        if not self.p > 1:
            raise ValueError(f"Moser profile needs p > 1, got {self.p}")

    @property
    def plateau(self) -> float:
        return math.log(self.n) ** ((self.p - 1.0) / self.p)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        ln = math.log(self.n)
        with np.errstate(divide="ignore"):
            frac = np.clip(np.log(1.0 / r) / ln, 0.0, 1.0)
        return self.plateau * frac


def moser_sample(mp: MoserProfile, grid: RadialGrid) -> GridFunction:
    return mp.sample(grid)


@dataclass(frozen=True)
class Bump(Profile):
    """amplitude * exp(-kappa x^2 / (1 - x^2)) with x = r / radius, zero for x >= 1."""

    kappa: float
    radius: float = 1.0
    amplitude: float = 1.0

    def __call__(self, r):
        x = np.asarray(r, dtype=float) / self.radius
        out = np.zeros_like(x)
        inside = x < 1.0
        xi = x[inside]
        out[inside] = self.amplitude * np.exp(-self.kappa * xi * xi / (1.0 - xi * xi))
        return out

    def derivative(self, r):
        x = np.asarray(r, dtype=float) / self.radius
        out = np.zeros_like(x)
        inside = x < 1.0
        xi = x[inside]
        val = np.exp(-self.kappa * xi * xi / (1.0 - xi * xi))
        out[inside] = -self.amplitude * val * 2.0 * self.kappa * xi / (1.0 - xi * xi) ** 2 / self.radius
        return out


def _bump_norms(kappa: float, p: float, alpha0: float) -> tuple[float, float]:
    """(|b|^p in L^p_alpha0, |b'|^p in L^p_{p-1}) for the unit-radius bump."""
    b = Bump(kappa)

    def fval(x):
        return float(b(np.array([x]))[0])

    def dval(x):
        return float(b.derivative(np.array([x]))[0])

    opts = dict(limit=400, epsabs=1e-15, epsrel=1e-13)
    lp = quad(lambda x: abs(fval(x)) ** p * x**alpha0, 0.0, 1.0, **opts)[0]
    dp = quad(lambda x: abs(dval(x)) ** p * x ** (p - 1.0), 0.0, 1.0, **opts)[0]
    return lp, dp


@lru_cache(maxsize=32)
def calibrated_bump(p: float, alpha0: float) -> Bump:
    """Bump with |psi0|_{L^p_alpha0} = |psi0'|_{L^p_{p-1}} = 1.

    The derivative norm is dilation invariant, so the amplitude fixes it and
    the radius then fixes the Lebesgue norm.  The shape parameter is chosen
    to make the support as small as possible.
    """
    res = minimize_scalar(lambda k: -math.log(_bump_norms(k, p, alpha0)[0] / _bump_norms(k, p, alpha0)[1]),
                          bounds=(0.05, 50.0), method="bounded", options={"xatol": 1e-6})
    kappa = float(res.x)
    lp, dp = _bump_norms(kappa, p, alpha0)
    amplitude = dp ** (-1.0 / p)
    radius = (dp / lp) ** (1.0 / (alpha0 + 1.0))
    return Bump(kappa, radius, amplitude)


@dataclass(frozen=True)
class VanishingFamily(Profile):
    """psi_n(r) = gamma_n psi0(gamma_n**(p/(alpha0+1)) r).

    Derivative norm gamma_n and unit Lebesgue norm; the Sobolev part of the
    X-norm vanishes as gamma_n -> 0.
    """

    gamma_n: float
    p: float
    alpha0: float
    base: Profile | None = None

    def __post_init__(self):
        if not self.gamma_n > 0:
            raise ValueError(f"gamma_n must be positive, got {self.gamma_n}")
        if self.base is None:
            object.__setattr__(self, "base", calibrated_bump(float(self.p), float(self.alpha0)))

    @property
    def dilation(self) -> float:
        return self.gamma_n ** (self.p / (self.alpha0 + 1.0))

    @property
    def support(self) -> float:
        """Outer edge of the support (infinite for non-bump bases)."""
        radius = getattr(self.base, "radius", math.inf)
        return radius / self.dilation

    def __call__(self, r):
        return self.gamma_n * self.base(self.dilation * np.asarray(r, dtype=float))


def vanishing_sample(vf: VanishingFamily, grid: RadialGrid) -> GridFunction:
    return vf.sample(grid)


def resample(v: GridFunction, dilation: float) -> np.ndarray:
    """Values of r -> v(dilation * r) at the grid nodes.

    Linear in log r between nodes; constant below r_min, matching the head
    model of the quadrature, and zero beyond r_max.
    """
    s = v.grid.log_nodes
    target = s + math.log(dilation)
    out = np.interp(target, s, v.values, left=v.values[0], right=0.0)
    out[target > s[-1] + 1e-12 * max(1.0, abs(s[-1]))] = 0.0
    return out


def _check_positive(**kw):
    for name, val in kw.items():
        if not val > 0:
            raise ValueError(f"{name} must be positive, got {val}")


def scale_lambda_mu(u, lam: float, mu_scale: float):
    """u -> lam * u(mu_scale r); exact for profiles, interpolated for grid data."""
    _check_positive(lam=lam, mu_scale=mu_scale)
    if isinstance(u, GridFunction):
        if mu_scale == 1.0:
            return GridFunction(u.grid, lam * u.values)
        return GridFunction(u.grid, lam * resample(u, mu_scale))
    return u.scaled(lam, mu_scale)


def scale_vt(v, t: float, sp: SpaceParams):
    """v_t(r) = t**(1/p) v(t**(1/(alpha0+1)) r): a curve through v of functions
    with fixed Lebesgue norm and derivative seminorm growing like t."""
    _check_positive(t=t)
    return scale_lambda_mu(v, t ** (1.0 / sp.p), t ** (1.0 / (sp.alpha0 + 1.0)))


def random_profile(rng: np.random.Generator, p: float, kind: str | None = None,
                   alpha0: float = 0.0) -> Profile:
    """Draw a trial function for corpus checks.

    ``kind`` is one of exp-power, mixture, moser, bump or None for a random pick.
    """
    kinds = ("exp-power", "mixture", "moser", "bump")
    kind = kind or kinds[rng.integers(len(kinds))]

    def exp_term():
        amp = math.exp(rng.uniform(math.log(0.3), math.log(3.0)))
        dil = math.exp(rng.uniform(math.log(0.2), math.log(5.0)))
        return Scaled(ExpPowerFamily(float(rng.uniform(0.6, 3.0))), amp, dil)

    if kind == "exp-power":
        return exp_term()
    if kind == "mixture":
        k = int(rng.integers(2, 4))
        return Mixture(tuple((float(rng.uniform(0.2, 1.0)), exp_term()) for _ in range(k)))
    if kind == "moser":
        n = math.exp(rng.uniform(math.log(3.0), math.log(1e3)))
        dil = math.exp(rng.uniform(math.log(0.2), math.log(5.0)))
        return Scaled(MoserProfile(n, p), float(rng.uniform(0.3, 2.0)), dil)
    if kind == "bump":
        dil = math.exp(rng.uniform(math.log(0.2), math.log(5.0)))
        return Scaled(Bump(float(rng.uniform(0.5, 4.0))), float(rng.uniform(0.3, 2.0)), dil)
    raise ValueError(f"unknown profile kind {kind!r}")
