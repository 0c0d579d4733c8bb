"""Scalar numerics: Lambert W (principal branch), bracketed roots, bounded
minimization, central differences and trapezoid quadrature.

Root finding and minimization delegate to :mod:`scipy.optimize` behind the
tolerance contract of :class:`ToleranceConfig`; the Lambert W evaluation is
done here because the branch point ``-1/e`` is exactly where the balanced,
fully coherent case lives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

__all__ = [
    "ToleranceConfig",
    "DomainError",
    "NoSignChangeError",
    "ConvergenceError",
    "lambert_w0",
    "find_root_bracketed",
    "minimize_scalar",
    "central_diff",
    "default_step",
    "trapezoid_integrate",
]

INV_E = 1.0 / math.e
_EPS = np.finfo(float).eps


class DomainError(ValueError):
    """Argument outside the supported domain."""


class NoSignChangeError(ValueError):
    """``f(lo)`` and ``f(hi)`` have the same sign."""


class ConvergenceError(ArithmeticError):
    """Iteration budget exhausted before the tolerance was met."""


@dataclass(frozen=True)
class ToleranceConfig:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError(f"abs_tol must be positive, got {self.abs_tol}")
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


DEFAULT_TOL = ToleranceConfig()


def _branch_point_seed(y: float) -> float:
    # series of W0 about y = -1/e in p = sqrt(2(1 + e*y))
    p = math.sqrt(max(2.0 * (1.0 + math.e * y), 0.0))
    return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3


def lambert_w0(y: float, cfg: ToleranceConfig = DEFAULT_TOL) -> float:
    """Principal branch ``W0(y)`` for ``y`` in ``[-1/e, 0]``.

    Halley iteration on ``w*exp(w) - y`` seeded with the branch-point series
    (or ``y - y**2`` close to zero). Inputs within ``abs_tol`` outside the
    interval are clamped; anything further out raises :class:`DomainError`.
    The result always lies in ``[-1, 0]``.
    """
    y = float(y)
    if math.isnan(y) or y < -INV_E - cfg.abs_tol or y > cfg.abs_tol:
        raise DomainError(f"lambert_w0 is defined here only on [-1/e, 0], got {y!r}")
    if y <= -INV_E:
        return -1.0
    if y >= 0.0:
        return 0.0

    w = y - y * y if y > -0.1 else _branch_point_seed(y)
    for _ in range(cfg.max_iter):
        ew = math.exp(w)
        f = w * ew - y
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = f / denom
        w -= step
        if w < -1.0:
            w = -1.0
        elif w > 0.0:
            w = 0.0
        if abs(step) <= 4.0 * _EPS * (1.0 + abs(w)):
            break
    else:
        raise ConvergenceError(f"lambert_w0 did not converge for y={y!r}")
    return w


def find_root_bracketed(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    cfg: ToleranceConfig = DEFAULT_TOL,
) -> float:
    """Root of ``f`` inside ``[lo, hi]`` by Brent's method.

    Requires ``f(lo) * f(hi) <= 0``. The iterate never leaves the bracket.
    """
    if lo > hi:
        lo, hi = hi, lo
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return float(lo)
    if fhi == 0.0:
        return float(hi)
    if flo * fhi > 0.0:
        raise NoSignChangeError(
            f"no sign change on [{lo}, {hi}]: f(lo)={flo:.3g}, f(hi)={fhi:.3g}"
        )
    x, info = optimize.brentq(
        f,
        lo,
        hi,
        xtol=cfg.abs_tol,
        rtol=max(cfg.rel_tol, 4.0 * _EPS),
        maxiter=cfg.max_iter,
        full_output=True,
        disp=False,
    )
    if not info.converged:
        raise ConvergenceError(f"root finder stopped after {info.iterations} iterations")
    return float(x)


def minimize_scalar(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    cfg: ToleranceConfig = DEFAULT_TOL,
) -> tuple[float, float]:
    """Minimize ``f`` on ``[lo, hi]`` (golden section with parabolic steps).

    ``f`` is assumed unimodal on the interval; otherwise the result is a local
    minimum. Both endpoints are also evaluated, so a function that is monotone
    on the interval returns the better endpoint.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    xatol = max(cfg.rel_tol * max(abs(lo), abs(hi)), cfg.abs_tol)
    res = optimize.minimize_scalar(
        f,
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": xatol, "maxiter": cfg.max_iter},
    )
    if not res.success:
        raise ConvergenceError(f"minimizer failed on [{lo}, {hi}]: {res.message}")
    best_x, best_f = float(res.x), float(res.fun)
    for edge in (lo, hi):
        fe = float(f(edge))
        if fe < best_f:
            best_x, best_f = float(edge), fe
    return best_x, best_f


def default_step(x: float) -> float:
    return 1e-5 * max(1.0, abs(x))


def central_diff(f: Callable[[float], float], x: float, h: float | None = None) -> float:
    """``(f(x+h) - f(x-h)) / 2h``; truncation error is O(h**2)."""
    if h is None:
        h = default_step(x)
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    return (f(x + h) - f(x - h)) / (2.0 * h)


def trapezoid_integrate(samples: Sequence[float] | np.ndarray, dx: float):
    """Composite trapezoid rule on uniformly spaced samples (real or complex)."""
    y = np.asarray(samples)
    if y.ndim != 1 or y.size < 2:
        raise ValueError("trapezoid_integrate needs at least 2 samples")
    if not dx > 0:
        raise ValueError(f"dx must be positive, got {dx}")
    return dx * (y.sum() - 0.5 * (y[0] + y[-1]))
