"""Efficiency function f and the two scalar root problems built on it.

``f`` maps an SINR to a packet success rate.  Everything downstream needs two
constants derived from it:

* ``gamma_star``: the SINR maximizing f(x)/x, i.e. the positive root of
  x f'(x) = f(x).
* ``beta_star``: the leader's operating SINR when it shares its best carrier
  with the follower, a root of (x - x^2 gamma_star) f'(x) = f(x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

X_MAX = 745.0
EPS_MARGIN = 1e-9
BISECT_XTOL = 1e-12
BETA_GRID_POINTS = 10_000
GAMMA_GRID_POINTS = 4_000

EXP_BLOCK = "exp_block"
CUSTOM = "custom"


class NoRoot(ArithmeticError):
    """Raised when x f'(x) = f(x) has no positive root on (0, X_MAX]."""


@dataclass(frozen=True)
class EfficiencyModel:
    """Sigmoidal efficiency function.

    Use :meth:`exp_block` for f(x) = (1 - e^-x)^M or :meth:`custom` to supply
    arbitrary numpy-vectorized callables.
    """

    kind: str
    M: Optional[int] = None
    f_custom: Optional[Callable] = field(default=None, repr=False, compare=False)
    f_prime_custom: Optional[Callable] = field(default=None, repr=False, compare=False)
    f_prime_at_zero: float = 0.0

    def __post_init__(self):
        if self.kind == EXP_BLOCK:
            if self.M is None or int(self.M) != self.M or self.M <= 1:
                raise ValueError(f"ExpBlock needs an integer block length M > 1, got {self.M!r}")
        elif self.kind == CUSTOM:
            if self.f_custom is None or self.f_prime_custom is None:
                raise ValueError("custom model needs both f and f_prime")
            if self.f_prime_at_zero < 0:
                raise ValueError("f_prime_at_zero must be nonnegative")
        else:
            raise ValueError(f"unknown efficiency model kind {self.kind!r}")

    @classmethod
    def exp_block(cls, M: int = 100) -> "EfficiencyModel":
        return cls(kind=EXP_BLOCK, M=int(M), f_prime_at_zero=0.0)

    @classmethod
    def custom(cls, f: Callable, f_prime: Callable, f_prime_at_zero: float) -> "EfficiencyModel":
        return cls(kind=CUSTOM, f_custom=f, f_prime_custom=f_prime,
                   f_prime_at_zero=float(f_prime_at_zero))

    def f(self, x):
        if self.kind == EXP_BLOCK:
            return (-np.expm1(-np.asarray(x, dtype=float))) ** self.M
        return self.f_custom(x)

    def f_prime(self, x):
        if self.kind == EXP_BLOCK:
            x = np.asarray(x, dtype=float)
            return self.M * np.exp(-x) * (-np.expm1(-x)) ** (self.M - 1)
        return self.f_prime_custom(x)

    def f_scalar(self, x: float) -> float:
        if self.kind == EXP_BLOCK:
            return (-math.expm1(-x)) ** self.M
        return float(self.f_custom(x))

    def gamma_residual(self, x):
        """x f'(x) - f(x); positive where f(x)/x is increasing."""
        return x * self.f_prime(x) - self.f(x)

    def beta_residual(self, x, gamma_star: float):
        return (x - x * x * gamma_star) * self.f_prime(x) - self.f(x)


@dataclass(frozen=True)
class GammaStar:
    value: float
    residual: float

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class BetaStar:
    """Root of the shared-carrier first-order condition; ``value`` is None when absent."""

    value: Optional[float]
    objective: Optional[float] = None

    @property
    def present(self) -> bool:
        return self.value is not None


def bisect(fn: Callable[[float], float], lo: float, hi: float, xtol: float = BISECT_XTOL) -> float:
    """Plain bisection; ``fn(lo)`` and ``fn(hi)`` must differ in sign."""
    flo = fn(lo)
    fhi = fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise NoRoot(f"no sign change on [{lo}, {hi}]")
    for _ in range(200):
        if hi - lo <= xtol:
            break
        mid = 0.5 * (lo + hi)
        fmid = fn(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _sign_changes(values: np.ndarray) -> np.ndarray:
    s = np.sign(values)
    return np.flatnonzero((s[:-1] * s[1:]) < 0)


def solve_gamma_star(model: EfficiencyModel) -> GammaStar:
    """Energy-efficient operating SINR, the maximizer of f(x)/x.

    For ExpBlock the root of x f' = f is the root of log(1 + M x) = x, which is
    unique and evaluated without overflow.  Custom models are scanned for
    sign changes of x f'(x) - f(x) from + to - (local maxima of f(x)/x); the
    best of those is returned.
    """
    if model.kind == EXP_BLOCK:
        M = model.M
        value = bisect(lambda x: math.log1p(M * x) - x, 1e-3 / M, X_MAX)
    else:
        grid = np.geomspace(1e-8, X_MAX, GAMMA_GRID_POINTS)
        with np.errstate(all="ignore"):
            res = np.asarray(model.gamma_residual(grid), dtype=float)
        idx = [i for i in _sign_changes(res) if res[i] > 0]
        if not idx:
            raise NoRoot("x f'(x) = f(x) has no positive root; f is not sigmoidal")
        roots = [bisect(lambda x: float(model.gamma_residual(x)), grid[i], grid[i + 1]) for i in idx]
        value = max(roots, key=lambda r: model.f_scalar(r) / r)
    residual = float(value * model.f_prime(value) - model.f(value))
    return GammaStar(value=float(value), residual=residual)


def beta_upper_bound(gamma_star: float, gamma_hat: float) -> float:
    return min(gamma_hat / (1.0 + gamma_star * (1.0 + gamma_hat)), (1.0 - EPS_MARGIN) / gamma_star)


def beta_objective(model: EfficiencyModel, gamma_star: float, x: float) -> float:
    return float(model.f_scalar(x) * (1.0 - x * gamma_star) / x)


def solve_beta_star(model: EfficiencyModel, gamma_star, gamma_hat: float) -> BetaStar:
    """Leader SINR on a shared carrier, searched on (0, upper].

    ``upper`` is the largest SINR at which the follower still prefers the
    shared carrier (and is kept strictly below 1/gamma_star).  Returns an
    absent BetaStar when no positive root lies in that interval.
    """
    g = float(gamma_star)
    if gamma_hat <= 0:
        return BetaStar(None)
    upper = beta_upper_bound(g, gamma_hat)
    if not upper > 0:
        return BetaStar(None)
    grid = np.geomspace(upper * 1e-10, upper, BETA_GRID_POINTS)
    if model.kind == EXP_BLOCK:
        # same sign as the raw residual, without the underflow of f near 0
        M = model.M

        def residual(x):
            return M * (x - x * x * g) - np.expm1(x)
    else:
        def residual(x):
            return model.beta_residual(x, g)

    with np.errstate(all="ignore"):
        res = np.asarray(residual(grid), dtype=float)
    roots = [bisect(lambda x: float(residual(x)), grid[i], grid[i + 1]) for i in _sign_changes(res)]
    if res[-1] == 0.0:
        roots.append(float(grid[-1]))
    if not roots:
        return BetaStar(None)
    best = max(roots, key=lambda r: beta_objective(model, g, r))
    return BetaStar(value=float(best), objective=beta_objective(model, g, best))


def existence_guaranteed(model: EfficiencyModel, gamma_star=None) -> bool:
    """True when f'(0+) = 0, which rules out the no-equilibrium case."""
    if model.kind == EXP_BLOCK:
        return True
    return model.f_prime_at_zero == 0.0
