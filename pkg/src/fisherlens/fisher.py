"""Closed-form Fisher information for the separation ``s``.

All expressions are evaluated in the dimensionless separation ``u = s/sigma``
and rescaled by ``1/sigma**2`` on output. Denominators that can vanish at
``u = 0`` are split into ``A*expm1(u^2/8) + c`` with ``c`` written as a sum
of squares, so the balanced, fully coherent corner is a removable
singularity handled by its limit instead of producing 0/0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

from .model import AnalyzerBasis, SourceModel, cos_sin
from .numerics import (
    DEFAULT_TOL,
    NoSignChangeError,
    ToleranceConfig,
    central_diff,
    find_root_bracketed,
    lambert_w0,
    minimize_scalar,
)

__all__ = [
    "SourceTag",
    "FiSample",
    "SLeast",
    "f_tot",
    "f_tot_limit0",
    "f_unentangled",
    "f_balanced",
    "f_eta",
    "characteristic_residual",
    "effective_coherence",
    "s_least_analytic",
    "s_least_mapped",
    "s_least_numeric",
]

# constants below this are rounding residue of an exact zero
_SNAP = 1e-15


class SourceTag(enum.Enum):
    ENTANGLED = "entangled"
    UNENTANGLED = "unentangled"
    BALANCED = "balanced"
    ETA = "eta"
    ORACLE = "oracle"


@dataclass(frozen=True)
class FiSample:
    s: float
    f: float
    source_tag: SourceTag

    def __post_init__(self):
        if self.s < 0:
            raise ValueError(f"s must be non-negative, got {self.s}")
        if self.f < 0:
            raise ValueError(f"Fisher information must be non-negative, got {self.f}")


class SLeast(NamedTuple):
    s: float
    f_min: float
    interior: bool


def _check_s(s: float) -> float:
    s = float(s)
    if not s >= 0:
        raise ValueError(f"separation must be non-negative, got {s!r}")
    return s


def _snap(c: float, scale: float) -> float:
    return 0.0 if c <= _SNAP * scale else c


def _entangled_terms(model: SourceModel, basis: AnalyzerBasis):
    """Coupling ``k`` and the two denominator factors as ``(A, c1), (B, c2)``.

    ``D1 = A e^{u^2/8} - k = A expm1(u^2/8) + c1`` and
    ``D2 = B e^{u^2/8} + k = B expm1(u^2/8) + c2``.
    """
    r = model.r
    ca, sa = cos_sin(basis.alpha)
    cp, sp = cos_sin(model.phi)
    _, s2a = cos_sin(2.0 * basis.alpha)
    k = r * s2a * cp
    big_a = ca * ca + r * r * sa * sa
    big_b = r * r * ca * ca + sa * sa
    scale = 1.0 + r * r
    c1 = _snap((ca - r * sa * cp) ** 2 + (r * sa * sp) ** 2, scale)
    c2 = _snap((r * ca + sa * cp) ** 2 + (sa * sp) ** 2, scale)
    return k, big_a, big_b, c1, c2


def _entangled_deficit(k, big_a, big_b, c1, c2, u: float) -> float:
    # k^2 u^2 / (16 D1 D2), continuous at u = 0
    if k == 0.0:
        return 0.0
    x = u * u / 8.0
    if x == 0.0:
        if c1 == 0.0:
            return k * k / (2.0 * big_a * c2)
        if c2 == 0.0:
            return k * k / (2.0 * big_b * c1)
        return 0.0
    em = math.expm1(x)
    d1 = big_a * em + c1
    d2 = big_b * em + c2
    return k * k * (8.0 * x) / (16.0 * d1 * d2)


def f_tot(model: SourceModel, basis: AnalyzerBasis, s: float) -> float:
    """Weighted branch Fisher information of the entangled field."""
    s = _check_s(s)
    u = s / model.sigma
    deficit = _entangled_deficit(*_entangled_terms(model, basis), u)
    return max(0.25 - deficit, 0.0) / model.sigma ** 2


def f_tot_limit0(model: SourceModel, basis: AnalyzerBasis) -> float:
    """``lim_{s->0} f_tot``.

    Equals ``1/(4 sigma^2)`` unless one denominator factor vanishes at
    ``s = 0`` (``phi`` in {0, pi} and ``tan(alpha) = +-1/r``); then the finite
    limit of the ratio is used, which is 0 for the balanced case
    ``r = 1, alpha = pi/4, phi = 0``.
    """
    deficit = _entangled_deficit(*_entangled_terms(model, basis), 0.0)
    return max(0.25 - deficit, 0.0) / model.sigma ** 2


def f_unentangled(model: SourceModel, s: float) -> float:
    """Fisher information of the pure, unentangled two-source state.

    With ``k = a b cos(phi) exp(-u^2/8)`` this is
    ``(1/4 - k^2 + k u^2/8) / (1 + 2k)^2``, algebraically identical to the
    two-term form usually quoted. At ``r = 1, phi = pi`` the denominator
    vanishes as ``u -> 0`` but the value tends to 0 like ``u^2/96``; a short
    series is used there.
    """
    s = _check_s(s)
    sigma = model.sigma
    u = s / sigma
    a, b = model.a, model.b
    cp, _ = cos_sin(model.phi)
    ch, sh = cos_sin(0.5 * model.phi)
    c = a * b * cp
    # 1 + 2c and 1/2 - c via half angles, using a^2 + b^2 = 1
    one_plus_2c = (a - b) ** 2 + 4.0 * a * b * ch * ch
    half_minus_c = 0.5 * (a - b) ** 2 + 2.0 * a * b * sh * sh
    x = u * u / 8.0

    if one_plus_2c <= 1e-14 and u < 0.05:
        u2 = u * u
        return (u2 / 96.0 - u2 ** 3 / 184320.0 + u2 ** 5 / 330301440.0) / sigma ** 2

    delta = math.exp(-x)
    one_minus_delta = -math.expm1(-x)
    if c >= 0.0:
        denom = 1.0 + 2.0 * c * delta
    else:
        denom = one_plus_2c + 2.0 * (-c) * one_minus_delta
    # 1/4 - c^2 delta^2, split to avoid cancellation near |c| = 1/2
    quarter_minus_k2 = half_minus_c * 0.5 * one_plus_2c + c * c * (-math.expm1(-2.0 * x))
    numer = quarter_minus_k2 + c * delta * u * u / 8.0
    return max(numer, 0.0) / denom ** 2 / sigma ** 2


def _coherence_form(q: float, one_minus_q: float, sigma: float, s: float) -> float:
    # 1/4 - (q/16) u^2 / (e^{u^2/4} - q)
    u = _check_s(s) / sigma
    if q == 0.0:
        return 0.25 / sigma ** 2
    y = u * u / 4.0
    if y == 0.0:
        deficit = q / 4.0 if one_minus_q == 0.0 else 0.0
    else:
        deficit = q * (4.0 * y) / (16.0 * (math.expm1(y) + one_minus_q))
    return max(0.25 - deficit, 0.0) / sigma ** 2


def _angle_coherence(theta: float, phi: float) -> tuple[float, float]:
    c2t, s2t = cos_sin(2.0 * theta)
    cp, sp = cos_sin(phi)
    q = (s2t * cp) ** 2
    one_minus_q = _snap(c2t * c2t + (s2t * sp) ** 2, 1.0)
    return q, one_minus_q


def f_balanced(alpha: float, phi: float, sigma: float, s: float) -> float:
    """Balanced sources (``r = 1``) seen through an analyzer rotated by ``alpha``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    return _coherence_form(*_angle_coherence(alpha, phi), sigma, s)


def f_eta(eta: float, phi: float, sigma: float, s: float) -> float:
    """Sources of unbalanceness angle ``eta`` at analyzer angle ``pi/4``.

    Same functional form as :func:`f_balanced` with ``alpha`` replaced by ``eta``.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    return _coherence_form(*_angle_coherence(eta, phi), sigma, s)


def characteristic_residual(model: SourceModel, basis: AnalyzerBasis, s: float) -> float:
    """``Lambda(s) e^{u^2/4} + Pi(s) e^{u^2/8} + Omega``, zero at stationary points."""
    u = _check_s(s) / model.sigma
    a2, b2 = model.a ** 2, model.b ** 2
    ab = model.a * model.b
    ca, sa = cos_sin(basis.alpha)
    _, s2a = cos_sin(2.0 * basis.alpha)
    cp, _ = cos_sin(model.phi)
    p1 = a2 * ca * ca + b2 * sa * sa
    p2 = b2 * ca * ca + a2 * sa * sa
    x = u * u / 8.0
    lam = p1 * p2 * (1.0 - 2.0 * x)
    pi_ = (2.0 * p1 - 1.0) * (1.0 - x) * ab * s2a * cp
    omega = -((ab * s2a * cp) ** 2)
    return lam * math.exp(2.0 * x) + pi_ * math.exp(x) + omega


def s_least_analytic(alpha: float, phi: float, sigma: float = 1.0) -> float:
    """Least resolvable separation for balanced sources, via Lambert W0."""
    q, _ = _angle_coherence(alpha, phi)
    return _s_least_from_q(q, sigma)


def _s_least_from_q(q: float, sigma: float) -> float:
    w = lambert_w0(-q / math.e)
    return sigma * math.sqrt(max(4.0 + 4.0 * w, 0.0))


def effective_coherence(model: SourceModel, basis: AnalyzerBasis) -> float | None:
    """Effective ``sin^2(2 theta) cos^2(phi)`` when ``f_tot`` has the balanced form.

    That happens when both denominator factors share one coefficient, i.e.
    ``r = 1`` or ``alpha = pi/4`` (mod pi/2); otherwise returns ``None``.
    """
    k, big_a, big_b, _, _ = _entangled_terms(model, basis)
    if abs(big_a - big_b) > 1e-12 * (big_a + big_b):
        return None
    if big_a == 0.0:
        return 0.0
    return min((k / big_a) ** 2, 1.0)


def s_least_mapped(model: SourceModel, basis: AnalyzerBasis) -> float | None:
    """Closed-form least separation where one exists (see :func:`effective_coherence`)."""
    q = effective_coherence(model, basis)
    if q is None:
        return None
    return _s_least_from_q(q, model.sigma)


def s_least_numeric(
    model: SourceModel,
    basis: AnalyzerBasis,
    search_hi: float | None = None,
    cfg: ToleranceConfig = DEFAULT_TOL,
) -> SLeast:
    """Locate the interior minimum of ``f_tot`` on ``(1e-6 sigma, search_hi]``.

    Bounded minimization followed by a root polish of the central-difference
    slope. Flat or non-decreasing curves return
    ``SLeast(0.0, f_tot_limit0, interior=False)``.
    """
    sigma = model.sigma
    hi = 6.0 * sigma if search_hi is None else float(search_hi)
    if not hi > 0:
        raise ValueError(f"search_hi must be positive, got {hi}")
    lo = 1e-6 * sigma

    def f(t):
        return f_tot(model, basis, t)

    x, fx = minimize_scalar(f, lo, hi, cfg)
    f_lo = f(lo)
    flat_tol = 1e-13 / sigma ** 2
    if x <= lo * (1.0 + 1e-9) or f_lo - fx <= flat_tol or x >= hi:
        return SLeast(0.0, f_tot_limit0(model, basis), False)

    def slope(t):
        return central_diff(f, t, 1e-5 * max(sigma, t))

    width = 1e-3 * x
    try:
        x = find_root_bracketed(slope, max(x - width, lo), min(x + width, hi), cfg)
    except NoSignChangeError:
        pass
    return SLeast(x, f(x), True)
