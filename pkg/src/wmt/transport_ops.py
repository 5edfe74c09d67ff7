"""Measure-kind-generic subtraction, addition, and averaging.

`ominus` encodes how to optimally deform one measure into another: an
affine map for Gaussians, a (displacement tensor, coupling) pair for
discrete measures, or the symbolic zero when the measures coincide.
`oplus` applies such a detail back to a base measure, and
`mccann_average` evaluates the constant-speed geodesic between two
measures.  Sequence functionals (consecutive-gap delta, discrete
velocity norms, layer norms) live here as well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discrete_ot import Coupling, cost_matrix, solve_kantorovich, wasserstein_distance
from .errors import (
    BadParameter,
    DimensionMismatch,
    IncompatibleDetail,
    KindMismatch,
    Misaligned,
    TooShort,
    UnsupportedExponent,
)
from .gaussian_ot import (
    AffineMap,
    affine_lp_norm,
    gaussian_mccann,
    gaussian_ominus,
    gaussian_oplus,
    gaussian_w2,
)
from .measures import (
    DiscreteMeasure,
    GaussianMeasure,
    MeasureSequence,
    kind_of,
    merge_close_atoms,
)

#: distances below this collapse a difference to the symbolic zero map
ZERO_TOL = 1e-12

#: plan marginals must match the base weights this closely in oplus
MARGINAL_TOL = 1e-8


@dataclass(frozen=True)
class ZeroDetail:
    """The trivial zero map; norm 0 under every base measure."""


ZERO = ZeroDetail()


@dataclass(frozen=True)
class PlanDetail:
    """Displacement tensor (m, n, d) plus the coupling that weights it.

    displacements[i, j] is the vector from source atom i to target atom
    j; only entries with positive plan mass matter.
    """

    displacements: np.ndarray
    plan: Coupling

    def __post_init__(self):
        disp = np.asarray(self.displacements, dtype=float)
        m, n = self.plan.shape
        if disp.shape[:2] != (m, n) or disp.ndim != 3:
            raise IncompatibleDetail(
                f"displacement tensor {disp.shape} does not match plan {m}x{n}"
            )
        disp.setflags(write=False)
        object.__setattr__(self, "displacements", disp)


Detail = ZeroDetail | AffineMap | PlanDetail


@dataclass(frozen=True)
class DetailLayer:
    """One layer of detail coefficients, aligned with its refined sequence."""

    details: tuple
    level: int

    def __post_init__(self):
        object.__setattr__(self, "details", tuple(self.details))
        for i in range(0, len(self.details), 2):
            if not isinstance(self.details[i], ZeroDetail):
                raise Misaligned(
                    f"interpolating transform requires zero details at even "
                    f"indices, found {type(self.details[i]).__name__} at {i}"
                )

    def __len__(self):
        return len(self.details)


def _check_kinds(mu, nu):
    ka, kb = kind_of(mu), kind_of(nu)
    if ka != kb:
        raise KindMismatch(f"cannot combine {ka} with {kb}")
    if ka == "discrete" and mu.dim != nu.dim:
        raise DimensionMismatch(f"dimensions differ: {mu.dim} vs {nu.dim}")
    return ka


def measure_distance(mu, nu, p: float = 2.0) -> float:
    """W_p distance between two measures of the same kind."""
    kind = _check_kinds(mu, nu)
    if kind == "gaussian":
        if p != 2.0:
            raise UnsupportedExponent(f"Gaussian distances support only p = 2, got {p}")
        return gaussian_w2(mu, nu)
    return wasserstein_distance(mu, nu, p)


def ominus(nu, mu, p: float = 2.0) -> Detail:
    """Difference nu (-) mu; collapses to ZERO when the measures coincide."""
    kind = _check_kinds(mu, nu)
    if kind == "gaussian":
        if p != 2.0:
            raise UnsupportedExponent(f"Gaussian differences support only p = 2, got {p}")
        if gaussian_w2(mu, nu) < ZERO_TOL:
            return ZERO
        return gaussian_ominus(nu, mu)
    plan, cost = solve_kantorovich(mu, nu, p)
    if cost.distance < ZERO_TOL:
        return ZERO
    displacements = nu.atoms[None, :, :] - mu.atoms[:, None, :]
    return PlanDetail(displacements, plan)


def oplus(mu, psi):
    """Apply a detail to a base measure; inverse of ominus on its output."""
    if isinstance(psi, ZeroDetail):
        return mu
    if isinstance(psi, AffineMap):
        if not isinstance(mu, GaussianMeasure):
            raise IncompatibleDetail(f"affine detail applied to {kind_of(mu)} measure")
        return gaussian_oplus(mu, psi)
    if isinstance(psi, PlanDetail):
        if not isinstance(mu, DiscreteMeasure):
            raise IncompatibleDetail(f"plan detail applied to {kind_of(mu)} measure")
        entries = psi.plan.entries
        if entries.shape[0] != mu.size or psi.displacements.shape[2] != mu.dim:
            raise IncompatibleDetail(
                f"plan for {entries.shape[0]} atoms in R^{psi.displacements.shape[2]} "
                f"applied to measure with {mu.size} atoms in R^{mu.dim}"
            )
        residual = np.abs(psi.plan.row_sums() - mu.weights).max()
        if residual > MARGINAL_TOL:
            raise IncompatibleDetail(
                f"plan row sums deviate from base weights by {residual:.3e}"
            )
        ii, jj = np.nonzero(entries)
        points = mu.atoms[ii] + psi.displacements[ii, jj]
        return DiscreteMeasure(points, entries[ii, jj])
    raise IncompatibleDetail(f"not a detail: {type(psi).__name__}")


def interpolate_coupling(mu: DiscreteMeasure, nu: DiscreteMeasure, plan: Coupling, t: float):
    """Displacement interpolation of a known coupling at parameter t.

    Returns (midpoint, left, right) where `left` is the coupling from
    mu to the midpoint induced by the plan (mass plan[i, j] flows from
    atom i to the interpolated point of (i, j)) and `right` the induced
    coupling from the midpoint to nu.  Coincident interpolated atoms
    are merged after this bookkeeping, so iterated refinement stays on
    one McCann interpolant instead of re-solving (and possibly hopping
    between optimal plans).
    """
    entries = plan.entries
    ii, jj = np.nonzero(entries)
    points = (1.0 - t) * mu.atoms[ii] + t * nu.atoms[jj]
    masses = entries[ii, jj]
    atoms, weights, group = merge_close_atoms(points, masses)
    mid = DiscreteMeasure(atoms, weights)

    left = np.zeros((mu.size, mid.size))
    np.add.at(left, (ii, group), masses)
    right = np.zeros((mid.size, nu.size))
    np.add.at(right, (group, jj), masses)
    return (
        mid,
        Coupling(left, mu.atoms, mid.atoms, plan.cost_exponent),
        Coupling(right, mid.atoms, nu.atoms, plan.cost_exponent),
    )


def mccann_average(mu, nu, t: float, p: float = 2.0):
    """Weighted average at parameter t on a geodesic from mu to nu."""
    if not 0.0 <= t <= 1.0:
        raise BadParameter(f"t must lie in [0, 1], got {t}")
    kind = _check_kinds(mu, nu)
    if kind == "gaussian":
        if p != 2.0:
            raise UnsupportedExponent(f"Gaussian averaging supports only p = 2, got {p}")
        return gaussian_mccann(mu, nu, t)
    if t == 0.0:
        return mu
    if t == 1.0:
        return nu
    plan, _ = solve_kantorovich(mu, nu, p)
    mid, _, _ = interpolate_coupling(mu, nu, plan, t)
    return mid


def detail_norm(psi, mu, p: float = 2.0) -> float:
    """L^p(mu) norm of a detail over its base measure."""
    if isinstance(psi, ZeroDetail):
        return 0.0
    if isinstance(psi, AffineMap):
        if not isinstance(mu, GaussianMeasure):
            raise IncompatibleDetail(f"affine detail over {kind_of(mu)} base")
        return affine_lp_norm(psi, mu, p)
    if isinstance(psi, PlanDetail):
        if not isinstance(mu, DiscreteMeasure):
            raise IncompatibleDetail(f"plan detail over {kind_of(mu)} base")
        entries = psi.plan.entries
        if entries.shape[0] != mu.size:
            raise IncompatibleDetail(
                f"plan has {entries.shape[0]} rows, base has {mu.size} atoms"
            )
        residual = np.abs(psi.plan.row_sums() - mu.weights).max()
        if residual > MARGINAL_TOL:
            raise IncompatibleDetail(
                f"plan row sums deviate from base weights by {residual:.3e}"
            )
        lengths = np.sqrt(np.einsum("ijk,ijk->ij", psi.displacements, psi.displacements))
        return float(np.sum(lengths ** p * entries) ** (1.0 / p))
    raise IncompatibleDetail(f"not a detail: {type(psi).__name__}")


def seq_delta(seq: MeasureSequence, p: float = 2.0) -> float:
    """Largest W_p gap between consecutive elements."""
    if len(seq) < 2:
        raise TooShort("delta needs at least two elements")
    return max(
        measure_distance(seq[i], seq[i + 1], p) for i in range(len(seq) - 1)
    )


def discrete_velocity_norms(seq: MeasureSequence, p: float = 2.0) -> np.ndarray:
    """Per-step velocity norms W_p(mu_i, mu_{i+1}) / 2**-level."""
    if len(seq) < 2:
        raise TooShort("velocity norms need at least two elements")
    step = 2.0 ** seq.level
    return np.array(
        [measure_distance(seq[i], seq[i + 1], p) * step for i in range(len(seq) - 1)]
    )


def layer_norms(layer: DetailLayer, base: MeasureSequence, p: float = 2.0):
    """Per-index detail norms plus their 1-norm and sup-norm.

    `base` must be the refined sequence the details were taken against
    (the subdivision prediction), index for index.
    """
    if len(layer) != len(base):
        raise Misaligned(
            f"layer has {len(layer)} details, base sequence has {len(base)} elements"
        )
    per_index = np.array(
        [detail_norm(psi, mu, p) for psi, mu in zip(layer.details, base.elements)]
    )
    return float(per_index.sum()), float(per_index.max()), per_index
