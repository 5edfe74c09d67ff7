"""Synthetic sequence generators.

Three families: smooth curves of Gaussian measures between two
endpoints (optionally contaminated with parameter noise or a variance
jump on the middle third), convex combinations of such a curve with the
endpoint geodesic, and point clouds advected by a dipole field.

All randomness goes through numpy's default generator (PCG64) seeded
from the spec, so identical seeds reproduce sequences bit for bit
across platforms.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import BadParameter, BadSpec, KindMismatch, ParticleHitCharge, SingularPoint
from .measures import (
    DiscreteMeasure,
    GaussianMeasure,
    MeasureSequence,
    default_level,
)

log = logging.getLogger(__name__)

#: variance floor after noise/jump modifications
VARIANCE_FLOOR = 1e-6

#: simulation aborts when a particle gets this close to a charge
CHARGE_CLEARANCE = 1e-3

CHARGES = np.array([[-1.0, 0.0], [1.0, 0.0]])


@dataclass(frozen=True)
class NoiseSpec:
    """I.i.d. Gaussian perturbations of the curve parameters."""

    mean_sigma: float = 0.05
    var_sigma: float = 0.05
    taper: bool = True


@dataclass(frozen=True)
class JumpSpec:
    """Variance rescaling on the middle third of the parametrization."""

    variance_scale: float = 0.05


@dataclass(frozen=True)
class GaussianCurveSpec:
    endpoints: tuple = (GaussianMeasure(0.0, 1.884), GaussianMeasure(1.0, 0.1084))
    n_samples: int = 65
    bump_amplitude: float = 1.0
    noise: NoiseSpec | None = None
    jump: JumpSpec | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_samples < 3:
            raise BadSpec(f"need at least 3 samples, got {self.n_samples}")
        if self.bump_amplitude < 0.0:
            raise BadSpec(f"bump amplitude must be >= 0, got {self.bump_amplitude}")
        if self.jump is not None and self.jump.variance_scale <= 0.0:
            raise BadSpec("jump variance scale must be > 0")


def gen_gaussian_curve(spec: GaussianCurveSpec) -> MeasureSequence:
    """Sample a synthetic curve of Gaussian measures on a uniform grid.

    The baseline is the endpoint geodesic (linear mean and standard
    deviation); `bump_amplitude` adds a smooth sin^2 variance bump
    peaking at t = 0.5, so the curve deviates from the geodesic while
    keeping the endpoints exact.  Noise perturbs means and variances
    (tapered to zero at the endpoints when requested); a jump spec then
    rescales the variances on the middle third.  Variances are floored
    at 1e-6 afterwards.
    """
    mu0, mu1 = spec.endpoints
    ts = np.linspace(0.0, 1.0, spec.n_samples)
    means = (1.0 - ts) * mu0.mean + ts * mu1.mean
    stds = (1.0 - ts) * mu0.std + ts * mu1.std
    variances = stds ** 2
    variances[0], variances[-1] = mu0.variance, mu1.variance  # exact endpoints
    bump = np.sin(np.pi * ts) ** 2
    bump[0] = bump[-1] = 0.0  # sin(pi) rounds to 1.2e-16, not 0
    variances = variances + spec.bump_amplitude * bump

    if spec.noise is not None:
        rng = np.random.default_rng(spec.rng_seed)
        if spec.noise.taper:
            taper = np.sin(np.pi * ts)
            taper[0] = taper[-1] = 0.0
        else:
            taper = np.ones_like(ts)
        means = means + rng.normal(0.0, spec.noise.mean_sigma, spec.n_samples) * taper
        variances = variances + rng.normal(0.0, spec.noise.var_sigma, spec.n_samples) * taper

    if spec.jump is not None:
        middle = (ts > 1.0 / 3.0) & (ts < 2.0 / 3.0)
        variances = np.where(middle, variances * spec.jump.variance_scale, variances)

    clamped = int(np.sum(variances < VARIANCE_FLOOR))
    if clamped:
        log.warning("floored %d variances at %g", clamped, VARIANCE_FLOOR)
        variances = np.maximum(variances, VARIANCE_FLOOR)

    elements = tuple(GaussianMeasure(m, v) for m, v in zip(means, variances))
    return MeasureSequence(elements, default_level(spec.n_samples))


def gen_weighted_family(smooth: MeasureSequence, k: float) -> MeasureSequence:
    """Blend a Gaussian curve with the geodesic between its endpoints.

    Parameter-wise convex combination with weight k on the curve: means
    and standard-deviation paths are averaged against the sampled
    geodesic, so k = 0 returns the geodesic and k = 1 the input curve.
    """
    if not 0.0 <= k <= 1.0:
        raise BadParameter(f"k must lie in [0, 1], got {k}")
    if smooth.kind != "gaussian":
        raise KindMismatch("weighted family is defined for Gaussian sequences")
    n = len(smooth)
    first, last = smooth[0], smooth[-1]
    ts = np.linspace(0.0, 1.0, n)
    geo_means = (1.0 - ts) * first.mean + ts * last.mean
    geo_stds = (1.0 - ts) * first.std + ts * last.std
    elements = []
    for i, mu in enumerate(smooth.elements):
        mean = (1.0 - k) * geo_means[i] + k * mu.mean
        std = (1.0 - k) * geo_stds[i] + k * mu.std
        elements.append(GaussianMeasure(mean, std * std))
    return smooth.with_elements(elements)


# -- dipole point clouds ------------------------------------------------------


def dipole_field(x: float, y: float) -> np.ndarray:
    """Field of a +/- charge pair at (-1, 0) and (1, 0), Coulomb constant 1."""
    r_plus = (x + 1.0) ** 2 + y ** 2
    r_minus = (x - 1.0) ** 2 + y ** 2
    if r_plus == 0.0 or r_minus == 0.0:
        raise SingularPoint(f"field is singular at ({x}, {y})")
    return r_plus ** -1.5 * np.array([x + 1.0, y]) - r_minus ** -1.5 * np.array(
        [x - 1.0, y]
    )


def _field_at(points: np.ndarray) -> np.ndarray:
    d_plus = points - CHARGES[0]
    d_minus = points - CHARGES[1]
    r_plus = np.einsum("ij,ij->i", d_plus, d_plus)
    r_minus = np.einsum("ij,ij->i", d_minus, d_minus)
    if np.any(r_plus == 0.0) or np.any(r_minus == 0.0):
        raise SingularPoint("field is singular at a charge")
    return d_plus * r_plus[:, None] ** -1.5 - d_minus * r_minus[:, None] ** -1.5


@dataclass(frozen=True)
class DipoleSpec:
    n_particles: int = 10
    start_center: tuple = (-2.5, 1.0)
    start_spread: float = 0.3
    timestep: float = 0.15
    n_steps: int = 640
    field_noise_sigma: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_particles < 1:
            raise BadSpec(f"need at least one particle, got {self.n_particles}")
        if self.timestep <= 0.0:
            raise BadSpec(f"timestep must be > 0, got {self.timestep}")
        if self.n_steps < 1:
            raise BadSpec(f"need at least one step, got {self.n_steps}")
        if self.start_spread < 0.0 or self.field_noise_sigma < 0.0:
            raise BadSpec("spread and noise sigma must be >= 0")


def _clearance(points: np.ndarray) -> float:
    gaps = np.linalg.norm(points[:, None, :] - CHARGES[None, :, :], axis=2)
    return float(gaps.min())


def simulate_dipole(spec: DipoleSpec, field_fn=None) -> MeasureSequence:
    """Explicit-Euler advection of a uniform point cloud along the field.

    Each timestep contributes one uniform discrete measure over the
    particle positions, n_steps + 1 in total.  With field_noise_sigma
    > 0, i.i.d. Gaussian noise is added to the field per coordinate per
    step.  `field_fn` exists for tests that want to swap the field out.
    """
    rng = np.random.default_rng(spec.rng_seed)
    field = _field_at if field_fn is None else field_fn

    positions = rng.normal(
        loc=spec.start_center, scale=spec.start_spread, size=(spec.n_particles, 2)
    )
    for _ in range(100):
        bad = np.linalg.norm(
            positions[:, None, :] - CHARGES[None, :, :], axis=2
        ).min(axis=1) < CHARGE_CLEARANCE
        if not bad.any():
            break
        positions[bad] = rng.normal(
            loc=spec.start_center, scale=spec.start_spread, size=(int(bad.sum()), 2)
        )
    else:
        raise BadSpec("could not place particles clear of the charges")

    weights = np.full(spec.n_particles, 1.0 / spec.n_particles)
    elements = [DiscreteMeasure(positions.copy(), weights)]
    for step in range(spec.n_steps):
        velocity = field(positions)
        if spec.field_noise_sigma > 0.0:
            velocity = velocity + rng.normal(
                0.0, spec.field_noise_sigma, size=positions.shape
            )
        positions = positions + spec.timestep * velocity
        if _clearance(positions) < CHARGE_CLEARANCE:
            raise ParticleHitCharge(f"particle reached a charge at step {step + 1}")
        elements.append(DiscreteMeasure(positions.copy(), weights))
    return MeasureSequence(tuple(elements), default_level(len(elements)))


# -- spec (de)serialization ---------------------------------------------------


def gaussian_curve_spec_to_obj(spec: GaussianCurveSpec) -> dict:
    obj = {
        "endpoints": [
            {"mean": e.mean, "variance": e.variance} for e in spec.endpoints
        ],
        "n_samples": spec.n_samples,
        "bump_amplitude": spec.bump_amplitude,
        "rng_seed": spec.rng_seed,
    }
    if spec.noise is not None:
        obj["noise"] = {
            "mean_sigma": spec.noise.mean_sigma,
            "var_sigma": spec.noise.var_sigma,
            "taper": spec.noise.taper,
        }
    if spec.jump is not None:
        obj["jump"] = {"variance_scale": spec.jump.variance_scale}
    return obj


def gaussian_curve_spec_from_obj(obj: dict) -> GaussianCurveSpec:
    try:
        endpoints = tuple(
            GaussianMeasure(e["mean"], e["variance"]) for e in obj["endpoints"]
        )
        noise = None
        if obj.get("noise") is not None:
            noise = NoiseSpec(
                obj["noise"].get("mean_sigma", 0.05),
                obj["noise"].get("var_sigma", 0.05),
                bool(obj["noise"].get("taper", True)),
            )
        jump = None
        if obj.get("jump") is not None:
            jump = JumpSpec(obj["jump"]["variance_scale"])
        return GaussianCurveSpec(
            endpoints=endpoints,
            n_samples=int(obj["n_samples"]),
            bump_amplitude=float(obj.get("bump_amplitude", 1.0)),
            noise=noise,
            jump=jump,
            rng_seed=int(obj.get("rng_seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise BadSpec(f"bad Gaussian curve spec: {exc}") from exc


def dipole_spec_to_obj(spec: DipoleSpec) -> dict:
    return {
        "n_particles": spec.n_particles,
        "start_center": list(spec.start_center),
        "start_spread": spec.start_spread,
        "timestep": spec.timestep,
        "n_steps": spec.n_steps,
        "field_noise_sigma": spec.field_noise_sigma,
        "rng_seed": spec.rng_seed,
    }


def dipole_spec_from_obj(obj: dict) -> DipoleSpec:
    try:
        return DipoleSpec(
            n_particles=int(obj.get("n_particles", 10)),
            start_center=tuple(obj.get("start_center", (-2.5, 1.0))),
            start_spread=float(obj.get("start_spread", 0.3)),
            timestep=float(obj.get("timestep", 0.15)),
            n_steps=int(obj.get("n_steps", 640)),
            field_noise_sigma=float(obj.get("field_noise_sigma", 0.0)),
            rng_seed=int(obj.get("rng_seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise BadSpec(f"bad dipole spec: {exc}") from exc


def load_spec(path: str):
    """Load an experiment spec file; dispatches on its fields."""
    with open(path) as handle:
        obj = json.load(handle)
    if "endpoints" in obj or "n_samples" in obj:
        return gaussian_curve_spec_from_obj(obj)
    return dipole_spec_from_obj(obj)
