"""Pyramid transform for measure sequences.

Analysis repeatedly keeps the even-index elements and records, at every
odd index, the difference between the dropped element and its midpoint
prediction from the coarser scale.  Synthesis replays the refinement
and adds the stored details back, reconstructing the input.  The
optimality number sums all detail norms: it vanishes exactly on
constant sequences and on sequences sampled from constant-speed
geodesics, and grows with deviation from geodesic flow.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .discrete_ot import Coupling, solve_kantorovich
from .errors import (
    BadLength,
    BadParameter,
    LengthNotDyadic,
    Misaligned,
    ParseError,
    TooShort,
)
from .gaussian_ot import AffineMap
from .measures import (
    MeasureSequence,
    _atomic_write_text,
    _read_text,
    sequence_from_obj,
    sequence_to_obj,
)
from .transport_ops import (
    ZERO,
    DetailLayer,
    PlanDetail,
    ZeroDetail,
    detail_norm,
    interpolate_coupling,
    mccann_average,
    ominus,
    oplus,
)


@dataclass(frozen=True)
class Pyramid:
    """Coarse sequence plus detail layers; a lossless multiscale representation.

    `norms[k][i]` caches the norm of `layers[k].details[i]` under its
    base measure (the midpoint prediction) as computed at analysis
    time; thresholding and anomaly scoring work off this cache so they
    never re-solve transport problems.
    """

    coarse: MeasureSequence
    layers: tuple
    p: float
    kind: str
    norms: tuple

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "norms", tuple(np.asarray(v, dtype=float) for v in self.norms))
        if len(self.layers) != len(self.norms):
            raise Misaligned(
                f"{len(self.layers)} layers but {len(self.norms)} norm rows"
            )
        length = len(self.coarse)
        level = self.coarse.level
        for layer, norm_row in zip(self.layers, self.norms):
            length = 2 * length - 1
            level += 1
            if len(layer) != length:
                raise Misaligned(
                    f"layer at level {layer.level} has {len(layer)} details, "
                    f"expected {length}"
                )
            if layer.level != level:
                raise Misaligned(
                    f"layer level {layer.level} out of order, expected {level}"
                )
            if len(norm_row) != length:
                raise Misaligned("cached norms misaligned with layer")

    @property
    def depth(self) -> int:
        return len(self.layers)


def subdivide(seq: MeasureSequence, p: float = 2.0) -> MeasureSequence:
    """One refinement round: keep every element, insert pairwise midpoints."""
    elements, _ = _subdivide_elements(list(seq.elements), seq.kind, p, plans=None)
    return MeasureSequence(elements, seq.level + 1, seq.grid_origin)


def _subdivide_elements(elements, kind, p, plans):
    """Refine once; for discrete sequences also return couplings between
    consecutive refined elements, induced from the pair couplings so that
    repeated refinement stays on the same piecewise interpolant."""
    if len(elements) < 2:
        raise TooShort("subdivision needs at least two elements")
    if kind == "gaussian":
        refined = []
        for left, right in zip(elements, elements[1:]):
            refined.append(left)
            refined.append(mccann_average(left, right, 0.5, p))
        refined.append(elements[-1])
        return refined, None

    refined = []
    new_plans = []
    for k in range(len(elements) - 1):
        left, right = elements[k], elements[k + 1]
        plan = plans[k] if plans is not None else None
        if plan is None:
            plan, _ = solve_kantorovich(left, right, p)
        mid, to_mid, from_mid = interpolate_coupling(left, right, plan, 0.5)
        refined.append(left)
        refined.append(mid)
        new_plans.append(to_mid)
        new_plans.append(from_mid)
    refined.append(elements[-1])
    return refined, new_plans


def subdivide_r(seq: MeasureSequence, r: int, p: float = 2.0) -> MeasureSequence:
    """r-fold subdivision; outputs lie on the piecewise geodesic interpolant."""
    if r < 0:
        raise BadParameter(f"repeat count must be >= 0, got {r}")
    if r == 0:
        return seq
    elements = list(seq.elements)
    kind = seq.kind
    plans = None
    for _ in range(r):
        elements, plans = _subdivide_elements(elements, kind, p, plans)
    return MeasureSequence(elements, seq.level + r, seq.grid_origin)


def downsample(seq: MeasureSequence) -> MeasureSequence:
    """Keep even-index elements; inverse of subdivide on its output."""
    if len(seq) % 2 != 1 or len(seq) < 3:
        raise BadLength(f"downsampling needs odd length >= 3, got {len(seq)}")
    if seq.level < 1:
        raise BadLength("cannot downsample below level 0")
    return MeasureSequence(seq.elements[::2], seq.level - 1, seq.grid_origin)


def _check_analysis_depth(seq, levels):
    if levels < 0:
        raise BadParameter(f"levels must be >= 0, got {levels}")
    if levels > seq.level:
        raise LengthNotDyadic(
            f"cannot analyze {levels} levels: sequence sits at grid level {seq.level}"
        )
    if (len(seq) - 1) % (2 ** levels) != 0:
        raise LengthNotDyadic(
            f"length {len(seq)} != 1 (mod 2**{levels})"
        )


def analyze(seq: MeasureSequence, levels: int, p: float = 2.0) -> Pyramid:
    """Forward multiscale transform: `levels` rounds of downsampling, with
    the per-index differences against the midpoint predictions recorded."""
    _check_analysis_depth(seq, levels)
    current = seq
    layers = []
    norm_rows = []
    for _ in range(levels):
        coarse = downsample(current)
        predicted = subdivide(coarse, p)
        details = []
        norms = np.zeros(len(current))
        for i in range(len(current)):
            if i % 2 == 0:
                details.append(ZERO)
                continue
            psi = ominus(current[i], predicted[i], p)
            details.append(psi)
            norms[i] = detail_norm(psi, predicted[i], p)
        layers.append(DetailLayer(tuple(details), current.level))
        norm_rows.append(norms)
        current = coarse
    return Pyramid(
        coarse=current,
        layers=tuple(reversed(layers)),
        p=p,
        kind=seq.kind,
        norms=tuple(reversed(norm_rows)),
    )


def synthesize(pyr: Pyramid) -> MeasureSequence:
    """Inverse multiscale transform; reconstructs the analyzed sequence."""
    current = pyr.coarse
    for layer in pyr.layers:
        refined = subdivide(current, pyr.p)
        if len(layer) != len(refined) or layer.level != refined.level:
            raise Misaligned(
                f"layer at level {layer.level} with {len(layer)} details does "
                f"not match refined sequence at level {refined.level}"
            )
        elements = [oplus(mu, psi) for mu, psi in zip(refined.elements, layer.details)]
        current = refined.with_elements(elements)
    return current


def optimality_number(
    seq: MeasureSequence,
    levels: int,
    shift_averaged: bool = False,
    level_weights=None,
    p: float = 2.0,
) -> float:
    """Sum of detail-layer 1-norms over all levels.

    Zero exactly on geodesic and constant flows.  `level_weights`, when
    given, weights layer l (1-based) by level_weights[l-1]; the default
    is all ones.  With `shift_averaged`, the value is averaged with the
    optimality of the window shifted one index right (trailing elements
    dropped to keep the length analyzable), so oddities sitting at even
    indices are not missed.
    """
    if level_weights is None:
        level_weights = np.ones(levels)
    level_weights = np.asarray(level_weights, dtype=float)
    if level_weights.shape != (levels,):
        raise BadParameter(f"need {levels} level weights, got {level_weights.shape}")

    def omega_of(sequence):
        pyr = analyze(sequence, levels, p)
        return float(
            sum(w * row.sum() for w, row in zip(level_weights, pyr.norms))
        )

    omega = omega_of(seq)
    if not shift_averaged:
        return omega
    drop = 2 ** levels - 1
    shifted = seq.elements[1 : len(seq) - drop]
    if len(shifted) < 2 ** levels + 1:
        raise LengthNotDyadic(
            f"sequence too short to shift-average at {levels} levels"
        )
    omega_shifted = omega_of(MeasureSequence(shifted, levels, seq.grid_origin + seq.spacing))
    return 0.5 * (omega + omega_shifted)


def threshold_details(pyr: Pyramid, threshold: float) -> Pyramid:
    """Replace every detail whose cached norm exceeds `threshold` by the
    zero map; the coarse sequence is untouched and a new pyramid returned."""
    if threshold < 0.0:
        raise BadParameter(f"threshold must be >= 0, got {threshold}")
    new_layers = []
    new_norms = []
    for layer, row in zip(pyr.layers, pyr.norms):
        keep = row <= threshold
        details = tuple(
            psi if keep[i] else ZERO for i, psi in enumerate(layer.details)
        )
        new_layers.append(DetailLayer(details, layer.level))
        new_norms.append(np.where(keep, row, 0.0))
    return replace(pyr, layers=tuple(new_layers), norms=tuple(new_norms))


def detect_anomalies(pyr: Pyramid, base: MeasureSequence, k_sigma: float = 3.0):
    """Flag detail coefficients that stand out against their level.

    A detail at an odd index is flagged when its norm exceeds
    median + k_sigma * MAD of the level's other nonzero norms (robust
    statistics, so a handful of genuine anomalies cannot mask
    themselves; a lone nonzero detail on a level is always flagged).
    Returns (level, index, norm, time) tuples sorted by norm, largest
    first.
    """
    flags = []
    for layer, row in zip(pyr.layers, pyr.norms):
        nonzero = [float(v) for v in row[1::2] if v > 0.0]
        spacing = 2.0 ** (-layer.level)
        for index in range(1, len(layer), 2):
            norm = float(row[index])
            if norm <= 0.0:
                continue
            others = list(nonzero)
            others.remove(norm)
            if others:
                center = float(np.median(others))
                mad = float(np.median(np.abs(np.array(others) - center)))
                if norm <= center + k_sigma * mad:
                    continue
            flags.append(
                (layer.level, index, norm, base.grid_origin + index * spacing)
            )
    flags.sort(key=lambda f: -f[2])
    return flags


# -- pyramid serialization ----------------------------------------------------


def _detail_to_obj(psi):
    if isinstance(psi, ZeroDetail):
        return {"type": "zero"}
    if isinstance(psi, AffineMap):
        return {"type": "affine", "A": psi.slope, "B": psi.intercept}
    return {
        "type": "plan",
        "displacements": psi.displacements.tolist(),
        "coupling": {
            "entries": psi.plan.entries.tolist(),
            "source_atoms": psi.plan.source_atoms.tolist(),
            "target_atoms": psi.plan.target_atoms.tolist(),
            "cost_exponent": psi.plan.cost_exponent,
        },
    }


def _detail_from_obj(obj, where):
    if not isinstance(obj, dict) or "type" not in obj:
        raise ParseError(f"{where}: detail must be an object with a 'type'")
    try:
        if obj["type"] == "zero":
            return ZERO
        if obj["type"] == "affine":
            return AffineMap(obj["A"], obj["B"])
        if obj["type"] == "plan":
            cpl = obj["coupling"]
            plan = Coupling(
                np.asarray(cpl["entries"], dtype=float),
                np.asarray(cpl["source_atoms"], dtype=float),
                np.asarray(cpl["target_atoms"], dtype=float),
                float(cpl["cost_exponent"]),
            )
            return PlanDetail(np.asarray(obj["displacements"], dtype=float), plan)
    except (KeyError, TypeError, ValueError, BadParameter) as exc:
        raise ParseError(f"{where}: {exc}") from exc
    raise ParseError(f"{where}: unknown detail type {obj['type']!r}")


def pyramid_to_obj(pyr: Pyramid) -> dict:
    return {
        "p": pyr.p,
        "kind": pyr.kind,
        "coarse": sequence_to_obj(pyr.coarse),
        "layers": [
            {"level": layer.level, "details": [_detail_to_obj(d) for d in layer.details]}
            for layer in pyr.layers
        ],
        "norms": [row.tolist() for row in pyr.norms],
    }


def pyramid_from_obj(obj, where: str = "pyramid") -> Pyramid:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected a JSON object")
    for key in ("p", "kind", "coarse", "layers", "norms"):
        if key not in obj:
            raise ParseError(f"{where}: missing field '{key}'")
    coarse = sequence_from_obj(obj["coarse"], where=f"{where}.coarse")
    layers = []
    for k, layer_obj in enumerate(obj["layers"]):
        if not isinstance(layer_obj, dict) or "details" not in layer_obj or "level" not in layer_obj:
            raise ParseError(f"{where}.layers[{k}]: need 'level' and 'details'")
        details = tuple(
            _detail_from_obj(d, f"{where}.layers[{k}].details[{i}]")
            for i, d in enumerate(layer_obj["details"])
        )
        try:
            layers.append(DetailLayer(details, int(layer_obj["level"])))
        except Misaligned as exc:
            raise ParseError(f"{where}.layers[{k}]: {exc}") from exc
    try:
        return Pyramid(
            coarse=coarse,
            layers=tuple(layers),
            p=float(obj["p"]),
            kind=str(obj["kind"]),
            norms=tuple(np.asarray(row, dtype=float) for row in obj["norms"]),
        )
    except (Misaligned, TypeError, ValueError) as exc:
        raise ParseError(f"{where}: {exc}") from exc


def read_pyramid(path) -> Pyramid:
    text = _read_text(path)
    if not text.strip():
        raise ParseError(f"{path}: empty file")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    return pyramid_from_obj(obj, where=str(path))


def write_pyramid(pyr: Pyramid, path) -> None:
    _atomic_write_text(path, json.dumps(pyramid_to_obj(pyr)) + "\n")
