"""Truncated exponential exp_p and the regularized lower incomplete gamma.

For real order p >= 1,

    exp_p(t) = sum_{j>=0} t**(p-1+j) / Gamma(p+j) = e**t * P(p-1, t),

with P the regularized lower incomplete gamma function and exp_1 = exp.
Two independent routes are provided: a direct partial sum with a rigorous
tail certificate, and the closed form through P.  Both accept scalars or
arrays and are vectorized over ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LOG_SPACE_THRESHOLD",
    "LogValue",
    "SeriesTolerance",
    "gamma_fn",
    "exp_p_array",
    "exp_p_closed",
    "exp_p_complement",
    "exp_p_deriv",
    "exp_p_series",
    "log_exp_p",
    "phi_p",
    "reg_lower_gamma",
]

# Above this argument e**t is evaluated in log space.
LOG_SPACE_THRESHOLD = 700.0
_GAMMA_MAX_ARG = 171.62
_CF_TINY = 1e-300


@dataclass(frozen=True)
class LogValue:
    """A positive quantity too large for a float, stored by its logarithm."""

    log_value: float

    def __float__(self) -> float:
        return math.exp(self.log_value) if self.log_value < 709.78 else math.inf

    def to_dict(self) -> dict:
        return {"saturated": True, "log_value": self.log_value}


@dataclass(frozen=True)
class SeriesTolerance:
    rel_tol: float = 1e-14
    max_terms: int = 10000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")


def gamma_fn(x: float) -> float:
    """Euler Gamma on the positive reals (backed by ``math.gamma``)."""
    x = float(x)
    if not x > 0 or math.isnan(x):
        raise ValueError(f"gamma_fn requires x > 0, got {x}")
    if x > _GAMMA_MAX_ARG:
        raise OverflowError(f"Gamma({x}) exceeds the float range")
    return math.gamma(x)


def _check_order(p: float) -> float:
    p = float(p)
    if not p >= 1 or math.isinf(p):
        raise ValueError(f"order p must satisfy p >= 1, got {p}")
    return p


def _as_t(t) -> tuple[np.ndarray, bool]:
    arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise ValueError("argument t must be non-negative")
    return np.atleast_1d(arr), arr.ndim == 0


def _gamma_series(a: float, x: np.ndarray, max_iter: int) -> np.ndarray:
    # sum_n x**n / (a (a+1) ... (a+n)), used for x < a + 1
    term = np.full_like(x, 1.0 / a)
    total = term.copy()
    active = np.ones(x.shape, dtype=bool)
    for n in range(1, max_iter):
        term[active] *= x[active] / (a + n)
        total[active] += term[active]
        active &= np.abs(term) > np.abs(total) * 1e-17
        if not active.any():
            return total
    raise ArithmeticError("incomplete gamma series did not converge")


def _gamma_cf(a: float, x: np.ndarray, max_iter: int) -> np.ndarray:
    # modified Lentz evaluation of the continued fraction for Q, x >= a + 1
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / _CF_TINY)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, max_iter):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _CF_TINY, _CF_TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _CF_TINY, _CF_TINY, c)
        d = 1.0 / d
        delta = c * d
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > 1e-16
        if not active.any():
            return h
    raise ArithmeticError("incomplete gamma continued fraction did not converge")


def _reg_gamma_parts(a: float, x: np.ndarray, max_iter: int = 10000):
    """Return (P, Q) for a > 0 and finite x >= 0, each accurate to full
    relative precision where it is the one computed directly."""
    P = np.zeros_like(x)
    Q = np.ones_like(x)
    pos = x > 0
    if not pos.any():
        return P, Q
    lga = math.lgamma(a)
    lo = pos & (x < a + 1.0)
    hi = pos & ~lo
    if lo.any():
        xl = x[lo]
        pref = np.exp(a * np.log(xl) - xl - lga)
        P[lo] = pref * _gamma_series(a, xl, max_iter)
        Q[lo] = 1.0 - P[lo]
    if hi.any():
        xh = x[hi]
        pref = np.exp(a * np.log(xh) - xh - lga)
        Q[hi] = pref * _gamma_cf(a, xh, max_iter)
        P[hi] = 1.0 - Q[hi]
    return P, Q


def reg_lower_gamma(a, x):
    """P(a, x) = gamma(a, x) / Gamma(a) for a > 0, x >= 0.

    Series expansion below x = a + 1 and a continued fraction above it.
    """
    a = float(a)
    if not a > 0:
        raise ValueError(f"reg_lower_gamma requires a > 0, got {a}")
    xs, scalar = _as_t(x)
    P = np.ones_like(xs)
    finite = np.isfinite(xs)
    P[finite], _ = _reg_gamma_parts(a, xs[finite])
    return float(P[0]) if scalar else P.reshape(np.shape(x))


def _log_p(a: float, t: np.ndarray) -> np.ndarray:
    """log P(a, t) for t > 0 without cancellation in the tail."""
    P, Q = _reg_gamma_parts(a, t)
    out = np.empty_like(t)
    small = t < a + 1.0
    with np.errstate(divide="ignore"):
        out[small] = np.log(P[small])
    out[~small] = np.log1p(-Q[~small])
    return out


def log_exp_p(p: float, t) -> np.ndarray | float:
    """Natural log of exp_p(t); ``-inf`` at t = 0 when p > 1."""
    p = _check_order(p)
    ts, scalar = _as_t(t)
    if p == 1.0:
        out = ts.copy()
    else:
        out = np.full_like(ts, -np.inf)
        pos = ts > 0
        out[pos] = ts[pos] + _log_p(p - 1.0, ts[pos])
    return float(out[0]) if scalar else out.reshape(np.shape(t))


def exp_p_array(p: float, t) -> np.ndarray:
    """Vectorized closed form; entries past the float range become ``inf``."""
    p = _check_order(p)
    ts = np.asarray(t, dtype=float)
    if p == 1.0:
        with np.errstate(over="ignore"):
            return np.exp(ts)
    flat = np.atleast_1d(ts).ravel()
    out = np.zeros_like(flat)
    mid = (flat > 0) & (flat <= LOG_SPACE_THRESHOLD)
    if mid.any():
        P, _ = _reg_gamma_parts(p - 1.0, flat[mid])
        out[mid] = np.exp(flat[mid]) * P
    big = flat > LOG_SPACE_THRESHOLD
    if big.any():
        with np.errstate(over="ignore"):
            out[big] = np.exp(flat[big] + _log_p(p - 1.0, flat[big]))
    return out.reshape(ts.shape) if ts.ndim else out[0]


def exp_p_closed(p: float, t):
    """exp_p(t) = e**t P(p-1, t).

    Scalar inputs above ``LOG_SPACE_THRESHOLD`` return a :class:`LogValue`;
    array inputs return floats with ``inf`` where the value overflows.
    """
    p = _check_order(p)
    if p == 1.0:
        raise ValueError("the closed form needs p > 1; use exp_p_series for p = 1")
    ts, scalar = _as_t(t)
    if scalar:
        t0 = float(ts[0])
        if t0 > LOG_SPACE_THRESHOLD:
            return LogValue(float(log_exp_p(p, t0)))
        return float(exp_p_array(p, t0))
    return exp_p_array(p, ts).reshape(np.shape(t))


def exp_p_series(p: float, t, tol: SeriesTolerance = SeriesTolerance()):
    """Partial sum of the defining series with a certified tail.

    Summation stops once the geometric bound on the remainder, valid once
    the term ratio t/(p+j) drops below one, is under ``rel_tol`` times the
    running sum.  Scalars beyond ``LOG_SPACE_THRESHOLD`` are summed in log
    space and returned as a :class:`LogValue`.
    """
    p = _check_order(p)
    ts, scalar = _as_t(t)
    if scalar and ts[0] > LOG_SPACE_THRESHOLD:
        return LogValue(_log_series_scalar(p, float(ts[0]), tol))
    if np.any(ts > LOG_SPACE_THRESHOLD):
        raise OverflowError("array arguments beyond the float range; pass scalars")
    pos = ts > 0
    total = np.zeros_like(ts)
    if p == 1.0:
        total[~pos] = 1.0
    tp = ts[pos]
    term = np.exp((p - 1.0) * np.log(tp) - math.lgamma(p))
    acc = term.copy()
    active = np.ones(tp.shape, dtype=bool)
    for j in range(1, tol.max_terms):
        term = np.where(active, term * tp / (p + j - 1.0), term)
        acc = np.where(active, acc + term, acc)
        ratio = tp / (p + j)
        with np.errstate(divide="ignore", over="ignore"):
            tail = np.where(ratio < 1.0, term * ratio / (1.0 - ratio), np.inf)
        active &= ~(tail <= tol.rel_tol * acc)
        if not active.any():
            break
    else:
        raise ArithmeticError("exp_p series hit max_terms before the tail certificate")
    total[pos] = acc
    return float(total[0]) if scalar else total.reshape(np.shape(t))


def _log_series_scalar(p: float, t: float, tol: SeriesTolerance) -> float:
    lt = math.log(t)
    log_term = (p - 1.0) * lt - math.lgamma(p)
    log_acc = log_term
    for j in range(1, tol.max_terms):
        log_term += lt - math.log(p + j - 1.0)
        log_acc = np.logaddexp(log_acc, log_term)
        ratio = t / (p + j)
        if ratio < 1.0 and log_term + math.log(ratio / (1.0 - ratio)) < log_acc + math.log(tol.rel_tol):
            return float(log_acc)
    raise ArithmeticError("exp_p series hit max_terms before the tail certificate")


def exp_p_complement(p: float, t) -> np.ndarray | float:
    """e**t - exp_p(t) = e**t Q(p-1, t), accurate even where exp_p(t) rounds to e**t."""
    p = _check_order(p)
    ts, scalar = _as_t(t)
    if p == 1.0:
        out = np.zeros_like(ts)
    else:
        _, Q = _reg_gamma_parts(p - 1.0, ts)
        with np.errstate(over="ignore", divide="ignore"):
            out = np.exp(ts + np.log(Q))
    return float(out[0]) if scalar else out.reshape(np.shape(t))


def exp_p_deriv(p: float, t) -> np.ndarray | float:
    """d/dt exp_p(t) = exp_p(t) + t**(p-2)/Gamma(p-1) (just exp for p = 1)."""
    p = _check_order(p)
    ts = np.asarray(t, dtype=float)
    base = exp_p_array(p, ts)
    if p == 1.0:
        return base
    with np.errstate(divide="ignore"):
        extra = np.where(ts > 0, ts ** (p - 2.0), 0.0 if p > 2 else np.inf) / math.gamma(p - 1.0)
    if p == 2.0:
        extra = np.ones_like(ts)
    return base + extra


def phi_p(p: float, t):
    """exp_{ceil p}, a lower bound for exp_p that is strict for non-integer p."""
    p = _check_order(p)
    if p == 1.0:
        raise ValueError("phi_p needs p > 1")
    return exp_p_closed(math.ceil(p), t)
