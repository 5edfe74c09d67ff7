"""Closed-form quadratic transport between 1-D Gaussian measures.

For N(m0, s0) and N(m1, s1) the optimal map is affine,
T(x) = m1 + sqrt(s1/s0) (x - m0), so subtraction and addition of
measures reduce to affine-map algebra and the geodesic has an explicit
parametrization.  Only p = 2 is supported; other exponents have no
closed form here and are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import BadParameter, DegenerateMap, UnsupportedExponent
from .measures import GaussianMeasure


@dataclass(frozen=True)
class AffineMap:
    """The map x -> slope * x + intercept."""

    slope: float
    intercept: float

    def __post_init__(self):
        object.__setattr__(self, "slope", float(self.slope))
        object.__setattr__(self, "intercept", float(self.intercept))
        if not (math.isfinite(self.slope) and math.isfinite(self.intercept)):
            raise BadParameter("affine map entries must be finite")

    def __call__(self, x: float) -> float:
        return self.slope * x + self.intercept


def gaussian_w2(mu0: GaussianMeasure, mu1: GaussianMeasure) -> float:
    """Quadratic Wasserstein distance sqrt((m0-m1)^2 + (sqrt(s0)-sqrt(s1))^2)."""
    return math.hypot(mu0.mean - mu1.mean, mu0.std - mu1.std)


def gaussian_ominus(nu: GaussianMeasure, mu: GaussianMeasure) -> AffineMap:
    """Difference nu (-) mu: the optimal map from mu to nu minus the identity."""
    ratio = math.sqrt(nu.variance / mu.variance)
    return AffineMap(ratio - 1.0, nu.mean - ratio * mu.mean)


def gaussian_oplus(mu: GaussianMeasure, psi: AffineMap) -> GaussianMeasure:
    """Pushforward of mu by (identity + psi); inverse of gaussian_ominus."""
    scale = psi.slope + 1.0
    if scale <= 0.0:
        raise DegenerateMap(
            f"slope {psi.slope} <= -1 collapses or reverses the variance"
        )
    return GaussianMeasure(
        psi.intercept + mu.mean * scale,
        mu.variance * scale * scale,
    )


def gaussian_mccann(mu0: GaussianMeasure, mu1: GaussianMeasure, t: float) -> GaussianMeasure:
    """Point at parameter t on the constant-speed geodesic from mu0 to mu1."""
    if not 0.0 <= t <= 1.0:
        raise BadParameter(f"t must lie in [0, 1], got {t}")
    if t == 0.0:
        return mu0
    if t == 1.0:
        return mu1
    scale = 1.0 + t * (math.sqrt(mu1.variance / mu0.variance) - 1.0)
    return GaussianMeasure(
        (1.0 - t) * mu0.mean + t * mu1.mean,
        scale * scale * mu0.variance,
    )


def affine_lp_norm(psi: AffineMap, mu: GaussianMeasure, p: float = 2.0) -> float:
    """L^p(mu) norm of an affine map; closed form exists only for p = 2.

    For X ~ mu, E[(aX + b)^2] = (a m + b)^2 + a^2 s, so the norm of
    nu (-) mu under mu equals gaussian_w2(mu, nu).
    """
    if p != 2.0:
        raise UnsupportedExponent(f"Gaussian norms support only p = 2, got {p}")
    return math.hypot(psi.slope * mu.mean + psi.intercept, psi.slope * mu.std)
