"""Two-source field, analyzer basis and the rotated-basis branch decomposition.

Amplitude PSFs are ``psi(x) = (2 pi sigma^2)^(-1/4) exp(-x^2 / 4 sigma^2)``,
unit L2 norm, so that the two shifted copies overlap as
``exp(-s^2 / 8 sigma^2)``. The source at ``+s/2`` carries amplitude ``a``,
the one at ``-s/2`` carries ``b e^{i phi}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .numerics import central_diff

__all__ = [
    "SourceModel",
    "AnalyzerBasis",
    "BranchDecomposition",
    "overlap_delta",
    "branch_decomposition",
    "weight_derivative",
    "cos_sin",
]

_TRIG_ZERO = 1e-15


def cos_sin(angle: float) -> tuple[float, float]:
    """``(cos, sin)`` with float residue at multiples of pi/2 flushed to zero."""
    c, s = math.cos(angle), math.sin(angle)
    if abs(c) < _TRIG_ZERO:
        c = 0.0
    if abs(s) < _TRIG_ZERO:
        s = 0.0
    return c, s


@dataclass(frozen=True)
class SourceModel:
    """Two Gaussian sources with amplitude ratio ``r = b/a`` and phase ``phi``.

    ``a`` and ``b`` are derived so that ``a**2 + b**2 == 1``; ``eta`` is the
    unbalanceness angle ``atan(r)``. ``r > 1`` is accepted as is.
    """

    sigma: float = 1.0
    r: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma!r}")
        if not (math.isfinite(self.r) and self.r >= 0):
            raise ValueError(f"r must be non-negative and finite, got {self.r!r}")
        if not math.isfinite(self.phi):
            raise ValueError(f"phi must be finite, got {self.phi!r}")

    @classmethod
    def from_eta(cls, eta: float, sigma: float = 1.0, phi: float = 0.0) -> SourceModel:
        return cls(sigma=sigma, r=math.tan(eta), phi=phi)

    @property
    def a(self) -> float:
        return 1.0 / math.hypot(1.0, self.r)

    @property
    def b(self) -> float:
        return self.r / math.hypot(1.0, self.r)

    @property
    def eta(self) -> float:
        return math.atan(self.r)


@dataclass(frozen=True)
class AnalyzerBasis:
    """Rotation angle ``alpha`` of the partner's measurement basis.

    Any real angle is accepted; the information formulas only see
    ``sin 2alpha`` and ``cos^2 alpha`` so ``[0, pi/2]`` covers every case.
    """

    alpha: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be finite, got {self.alpha!r}")


@dataclass(frozen=True)
class BranchDecomposition:
    """Coefficients of the two conditional spatial states on the shifted PSFs.

    ``h1 = c1_plus psi_+ + c1_minus psi_-`` and likewise for ``h2``;
    ``n1``, ``n2`` are their squared norms at the separation they were built for.
    """

    c1_plus: complex
    c1_minus: complex
    c2_plus: complex
    c2_minus: complex
    n1: float
    n2: float

    @property
    def weights(self) -> tuple[float, float]:
        return self.n1, self.n2

    def coefficients(self, branch: int) -> tuple[complex, complex]:
        if branch == 1:
            return self.c1_plus, self.c1_minus
        if branch == 2:
            return self.c2_plus, self.c2_minus
        raise ValueError(f"branch must be 1 or 2, got {branch!r}")


def overlap_delta(s: float, sigma: float) -> float:
    """Overlap ``<psi_+|psi_->`` of the two shifted amplitude PSFs."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    u = s / sigma
    return math.exp(-u * u / 8.0)


def _gram_norm(cp: complex, cm: complex, s: float, sigma: float) -> float:
    # |cp|^2 + |cm|^2 + 2 Re(conj(cp) cm) delta, written as a sum of non-negative
    # terms so destructive branches do not go slightly negative
    cross = (cp.conjugate() * cm).real
    if cross >= 0.0:
        return abs(cp) ** 2 + abs(cm) ** 2 + 2.0 * cross * overlap_delta(s, sigma)
    u = s / sigma
    one_minus_delta = -math.expm1(-u * u / 8.0)
    return abs(cp + cm) ** 2 + 2.0 * (-cross) * one_minus_delta


def branch_decomposition(
    model: SourceModel, basis: AnalyzerBasis, s: float
) -> BranchDecomposition:
    a, b = model.a, model.b
    ca, sa = cos_sin(basis.alpha)
    phase = complex(*cos_sin(model.phi))
    c1p, c1m = complex(a * ca), -b * sa * phase
    c2p, c2m = complex(a * sa), b * ca * phase
    return BranchDecomposition(
        c1_plus=c1p,
        c1_minus=c1m,
        c2_plus=c2p,
        c2_minus=c2m,
        n1=_gram_norm(c1p, c1m, s, model.sigma),
        n2=_gram_norm(c2p, c2m, s, model.sigma),
    )


def weight_derivative(
    model: SourceModel, basis: AnalyzerBasis, s: float, h: float | None = None
) -> tuple[float, float]:
    """Central-difference ``(dn1/ds, dn2/ds)``."""
    if h is None:
        h = 1e-5 * max(model.sigma, abs(s))
    dn1 = central_diff(lambda t: branch_decomposition(model, basis, t).n1, s, h)
    dn2 = central_diff(lambda t: branch_decomposition(model, basis, t).n2, s, h)
    return dn1, dn2
