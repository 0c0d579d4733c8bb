"""First-principles Fisher information on a spatial grid.

Independent of :mod:`fisherlens.fisher`: the branch wavefunctions are sampled
on a grid, normalized at ``s - h`` and ``s + h``, and ``2 Tr[(d rho/ds)^2]``
is evaluated from inner products of the constituent vectors. With
``m = (u+ + u-)/2`` and ``d = u+ - u-`` (phases aligned),
``rho(s+h) - rho(s-h) = |m><d| + |d><m|`` so

    Tr[(d rho)^2] = (2 <m|m><d|d> + 2 Re <d|m>^2) / (2h)^2

which avoids the ``1 - |<u+|u->|^2`` cancellation and never forms an
``n x n`` matrix. One Richardson halving of ``h`` removes the O(h^2) term.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import (
    AnalyzerBasis,
    SourceModel,
    branch_decomposition,
    cos_sin,
    weight_derivative,
)
from .numerics import trapezoid_integrate

__all__ = [
    "Grid",
    "GridState",
    "GridError",
    "FiniteDifferenceWarning",
    "amplitude_psf",
    "grid_state",
    "fi_branch_numeric",
    "f_tot_numeric",
    "f_unentangled_numeric",
    "f_weights",
    "classical_fi_position",
]

MIN_WEIGHT = 1e-10
RICHARDSON_RTOL = 1e-5


class GridError(ValueError):
    """Grid too narrow or too coarse for the requested separation."""


class FiniteDifferenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class Grid:
    x_lo: float
    x_hi: float
    n: int = 4001

    def __post_init__(self):
        if self.n < 101 or self.n % 2 == 0:
            raise GridError(f"grid needs an odd number of points >= 101, got {self.n}")
        if not self.x_hi > self.x_lo:
            raise GridError(f"empty grid [{self.x_lo}, {self.x_hi}]")

    @classmethod
    def default(cls, s: float, sigma: float = 1.0, n: int = 4001) -> Grid:
        half = 8.0 * sigma + abs(s)
        return cls(-half, half, n)

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_lo, self.x_hi, self.n)

    def check(self, s: float, sigma: float) -> None:
        """Raise :class:`GridError` if the grid cannot resolve separation ``s``."""
        need = 16.0 * sigma + 2.0 * abs(s)
        if self.x_hi - self.x_lo < need * (1.0 - 1e-12):
            raise GridError(
                f"grid width {self.x_hi - self.x_lo:.4g} < 16 sigma + 2 s = {need:.4g}"
            )
        if self.dx > sigma / 20.0 * (1.0 + 1e-12):
            raise GridError(
                f"grid not converged: dx = {self.dx:.4g} exceeds sigma/20 = {sigma / 20:.4g}"
            )


@dataclass(frozen=True, eq=False)
class GridState:
    grid: Grid
    psi1: np.ndarray
    psi2: np.ndarray
    n1: float
    n2: float


def amplitude_psf(x: np.ndarray, center: float, sigma: float) -> np.ndarray:
    return (2.0 * math.pi * sigma ** 2) ** -0.25 * np.exp(-((x - center) ** 2) / (4.0 * sigma ** 2))


def _branch_vectors(model: SourceModel, basis: AnalyzerBasis, s: float, x: np.ndarray):
    # valid for any real s; negative s swaps the two sources
    dec = branch_decomposition(model, basis, abs(s))
    plus = amplitude_psf(x, s / 2.0, model.sigma)
    minus = amplitude_psf(x, -s / 2.0, model.sigma)
    return (
        dec.c1_plus * plus + dec.c1_minus * minus,
        dec.c2_plus * plus + dec.c2_minus * minus,
    )


def _unentangled_vector(model: SourceModel, s: float, x: np.ndarray):
    phase = complex(*cos_sin(model.phi))
    return model.a * amplitude_psf(x, s / 2.0, model.sigma) + model.b * phase * amplitude_psf(
        x, -s / 2.0, model.sigma
    )


def _norm2(v: np.ndarray, dx: float) -> float:
    return float(trapezoid_integrate(np.abs(v) ** 2, dx).real)


def _inner(u: np.ndarray, v: np.ndarray, dx: float) -> complex:
    return complex(trapezoid_integrate(np.conj(u) * v, dx))


def grid_state(
    model: SourceModel, basis: AnalyzerBasis, s: float, grid: Grid | None = None
) -> GridState:
    if s < 0:
        raise ValueError(f"separation must be non-negative, got {s}")
    sigma = model.sigma
    grid = Grid.default(s, sigma) if grid is None else grid
    grid.check(s, sigma)
    x = grid.x
    psi1, psi2 = _branch_vectors(model, basis, s, x)

    # edge intensity of the outermost PSF, relative to its peak
    edge = min(grid.x_hi - s / 2.0, s / 2.0 - grid.x_lo)
    if math.exp(-(edge ** 2) / (2.0 * sigma ** 2)) > 1e-12:
        raise GridError(f"grid too narrow: PSF tail at the boundary exceeds 1e-12 of peak")

    n1, n2 = _norm2(psi1, grid.dx), _norm2(psi2, grid.dx)
    dec = branch_decomposition(model, basis, s)
    if abs(n1 - dec.n1) > 1e-8 or abs(n2 - dec.n2) > 1e-8:
        raise GridError(
            f"grid norms ({n1:.10g}, {n2:.10g}) disagree with overlap weights "
            f"({dec.n1:.10g}, {dec.n2:.10g})"
        )
    return GridState(grid=grid, psi1=psi1, psi2=psi2, n1=n1, n2=n2)


def _pure_fi_at_step(state: Callable[[float], np.ndarray], s: float, h: float, dx: float) -> float:
    up = state(s + h)
    um = state(s - h)
    up = up / math.sqrt(_norm2(up, dx))
    um = um / math.sqrt(_norm2(um, dx))
    ov = _inner(um, up, dx)
    if abs(ov) > 0.0:
        um = um * (ov / abs(ov))
    d = up - um
    m = 0.5 * (up + um)
    dm = _inner(d, m, dx)
    tr = (2.0 * _norm2(m, dx) * _norm2(d, dx) + 2.0 * (dm * dm).real) / (2.0 * h) ** 2
    return 2.0 * tr


def _richardson(fn: Callable[[float], float], h: float, floor: float, what: str) -> float:
    coarse = fn(h)
    fine = fn(h / 2.0)
    if abs(coarse - fine) > RICHARDSON_RTOL * max(abs(fine), floor):
        warnings.warn(
            f"{what}: step h={h:.3g} and h/2 disagree ({coarse:.10g} vs {fine:.10g})",
            FiniteDifferenceWarning,
            stacklevel=3,
        )
    return (4.0 * fine - coarse) / 3.0


def _pure_state_fi(state, s: float, h: float, dx: float, sigma: float, what: str) -> float:
    return _richardson(
        lambda step: _pure_fi_at_step(state, s, step, dx), h, 1e-3 / sigma ** 2, what
    )


def _default_h(h: float | None, sigma: float) -> float:
    h = 1e-4 * sigma if h is None else float(h)
    if not h > 0:
        raise ValueError(f"finite-difference step must be positive, got {h}")
    return h


def _branch_fi(model, basis, s, grid, h):
    st = grid_state(model, basis, s, grid)
    x, dx = st.grid.x, st.grid.dx
    out = []
    for idx, n in enumerate((st.n1, st.n2)):
        if n < MIN_WEIGHT:
            out.append(0.0)
            continue
        out.append(
            _pure_state_fi(
                lambda t: _branch_vectors(model, basis, t, x)[idx],
                s,
                h,
                dx,
                model.sigma,
                f"branch {idx + 1}",
            )
        )
    return out[0], out[1], st.n1, st.n2


def fi_branch_numeric(
    model: SourceModel,
    basis: AnalyzerBasis,
    s: float,
    grid: Grid | None = None,
    h: float | None = None,
) -> tuple[float, float]:
    """Per-branch ``2 Tr[(d rho_i/ds)^2]`` of the normalized conditional states.

    A branch whose weight is below ``1e-10`` is skipped and reported as 0.
    ``s = 0`` is allowed: the state is smooth through ``s = 0`` (negative
    separations swap the sources), so the central stencil stays valid.
    """
    f1, f2, _, _ = _branch_fi(model, basis, s, grid, _default_h(h, model.sigma))
    return f1, f2


def f_tot_numeric(
    model: SourceModel,
    basis: AnalyzerBasis,
    s: float,
    grid: Grid | None = None,
    h: float | None = None,
) -> float:
    """Weighted total ``n1 F1 + n2 F2`` computed on the grid."""
    f1, f2, n1, n2 = _branch_fi(model, basis, s, grid, _default_h(h, model.sigma))
    return n1 * f1 + n2 * f2


def f_unentangled_numeric(
    model: SourceModel, s: float, grid: Grid | None = None, h: float | None = None
) -> float:
    """Pure-state Fisher information of ``a psi_+ + b e^{i phi} psi_-`` on the grid."""
    if s < 0:
        raise ValueError(f"separation must be non-negative, got {s}")
    grid = Grid.default(s, model.sigma) if grid is None else grid
    grid.check(s, model.sigma)
    x = grid.x
    return _pure_state_fi(
        lambda t: _unentangled_vector(model, t, x),
        s,
        _default_h(h, model.sigma),
        grid.dx,
        model.sigma,
        "unentangled state",
    )


def f_weights(
    model: SourceModel, basis: AnalyzerBasis, s: float, h: float | None = None
) -> float:
    """Classical information in the branch weights, ``sum_i (dn_i/ds)^2 / n_i``.

    Not part of the weighted-branch total; exposed for comparison with the
    classical position information.
    """
    dec = branch_decomposition(model, basis, s)
    dn = weight_derivative(model, basis, s, h)
    return sum(d * d / n for d, n in zip(dn, dec.weights) if n > MIN_WEIGHT)


def _position_fi_at_step(model, basis, s, h, x, dx) -> float:
    p_plus = [np.abs(v) ** 2 for v in _branch_vectors(model, basis, s + h, x)]
    p_minus = [np.abs(v) ** 2 for v in _branch_vectors(model, basis, s - h, x)]
    p_mid = [np.abs(v) ** 2 for v in _branch_vectors(model, basis, s, x)]
    total = 0.0
    for pp, pm, p0 in zip(p_plus, p_minus, p_mid):
        peak = p0.max()
        if peak == 0.0:
            continue
        dp = (pp - pm) / (2.0 * h)
        keep = p0 >= 1e-14 * peak
        integrand = np.zeros_like(p0)
        integrand[keep] = dp[keep] ** 2 / p0[keep]
        total += float(trapezoid_integrate(integrand, dx))
    return total


def classical_fi_position(
    model: SourceModel,
    basis: AnalyzerBasis,
    s: float,
    grid: Grid | None = None,
    h: float | None = None,
) -> float:
    """Classical Fisher information of the joint outcome (branch, position).

    ``sum_i int (d p_i/ds)^2 / p_i dx`` with ``p_i = |h_i(x)|^2`` unnormalized,
    so the weight information is included. Points with
    ``p_i < 1e-14 * max p_i`` contribute nothing.
    """
    if s < 0:
        raise ValueError(f"separation must be non-negative, got {s}")
    grid = Grid.default(s, model.sigma) if grid is None else grid
    grid.check(s, model.sigma)
    x, dx = grid.x, grid.dx
    return _richardson(
        lambda step: _position_fi_at_step(model, basis, s, step, x, dx),
        _default_h(h, model.sigma),
        1e-3 / model.sigma ** 2,
        "classical position information",
    )
