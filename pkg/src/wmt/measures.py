"""Measure value types and sequence I/O.

Two measure kinds are supported: 1-D Gaussian laws given by (mean,
variance), and weighted atom clouds in R^d with nonnegative weights
summing to one.  Sequences are finite windows over a dyadic grid
2**-level * Z; their length must satisfy n == 1 (mod 2**level) so that
`level` rounds of downsampling stay well defined.

All types are immutable after construction and safe to share between
threads.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadParameter,
    BadWeights,
    DimensionMismatch,
    IOFailure,
    LengthNotDyadic,
    MixedKinds,
    ParseError,
)

#: atoms closer than this are considered the same point and merged
MERGE_TOL = 1e-12

#: weights must sum to 1 within this tolerance before renormalization
WEIGHT_TOL = 1e-9

#: deepest default analysis depth
MAX_DEFAULT_LEVEL = 6


@dataclass(frozen=True)
class GaussianMeasure:
    """1-D Gaussian law N(mean, variance), variance strictly positive."""

    mean: float
    variance: float

    def __post_init__(self):
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "variance", float(self.variance))
        if not (math.isfinite(self.mean) and math.isfinite(self.variance)):
            raise BadParameter("Gaussian parameters must be finite")
        if self.variance <= 0.0:
            raise BadParameter(
                f"variance must be > 0, got {self.variance!r}"
            )

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


def canonical_order(atoms: np.ndarray) -> np.ndarray:
    """Lexicographic row order (first coordinate most significant)."""
    return np.lexsort(tuple(atoms.T[::-1]))


def merge_close_atoms(atoms: np.ndarray, weights: np.ndarray, tol: float = MERGE_TOL):
    """Group atoms within Euclidean distance `tol` and sum their weights.

    Returns (merged_atoms, merged_weights, group_index) where
    group_index[i] is the merged row that original atom i went to.  The
    merged atoms come out in canonical lexicographic order, so two
    representations of the same cloud produce identically ordered
    output; downstream plan bookkeeping relies on this.
    """
    m = atoms.shape[0]
    if m > 1:
        # union-find over all close pairs (transitive closure on purpose)
        parent = np.arange(m, dtype=np.intp)

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        diff = atoms[:, None, :] - atoms[None, :, :]
        close = np.einsum("ijk,ijk->ij", diff, diff) <= tol * tol
        ii, jj = np.nonzero(np.triu(close, k=1))
        for a, b in zip(ii.tolist(), jj.tolist()):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

        roots = np.array([find(i) for i in range(m)], dtype=np.intp)
        reps, group = np.unique(roots, return_inverse=True)
        merged_atoms = atoms[reps]
        merged_weights = np.zeros(len(reps))
        np.add.at(merged_weights, group, weights)
    else:
        merged_atoms = atoms
        merged_weights = np.asarray(weights, dtype=float)
        group = np.zeros(m, dtype=np.intp)

    order = canonical_order(merged_atoms)
    inverse = np.empty_like(order)
    inverse[order] = np.arange(len(order))
    return merged_atoms[order], merged_weights[order], inverse[group]


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted atom cloud in R^d.

    Construction canonicalizes: atoms within 1e-12 of each other are
    merged (weights summed), zero-weight atoms are dropped, and weights
    are renormalized to sum to exactly one.  Weights farther than 1e-9
    from summing to one are rejected rather than silently fixed.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        weights = np.asarray(self.weights, dtype=float).ravel()
        if atoms.ndim != 2 or atoms.shape[0] < 1 or atoms.shape[1] < 1:
            raise DimensionMismatch(f"atoms must be (m, d) with m,d >= 1, got {atoms.shape}")
        if not np.all(np.isfinite(atoms)):
            raise DimensionMismatch("atoms must be finite")
        if weights.shape[0] != atoms.shape[0]:
            raise BadWeights(
                f"{atoms.shape[0]} atoms but {weights.shape[0]} weights"
            )
        if not np.all(np.isfinite(weights)) or np.any(weights < 0.0):
            raise BadWeights("weights must be finite and nonnegative")
        total = float(weights.sum())
        if abs(total - 1.0) > WEIGHT_TOL:
            raise BadWeights(f"weights sum to {total!r}, expected 1 within {WEIGHT_TOL}")

        atoms, weights, _ = merge_close_atoms(atoms, weights)
        keep = weights > 0.0
        if not np.any(keep):
            raise BadWeights("all weights are zero")
        atoms, weights = atoms[keep], weights[keep]

        # renormalize so the correctly-rounded sum is exactly 1.0
        weights = weights / math.fsum(weights)
        for _ in range(8):
            residual = 1.0 - math.fsum(weights)
            if residual == 0.0:
                break
            weights[np.argmax(weights)] += residual

        atoms.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @property
    def size(self) -> int:
        return self.atoms.shape[0]


Measure = GaussianMeasure | DiscreteMeasure


def kind_of(measure) -> str:
    if isinstance(measure, GaussianMeasure):
        return "gaussian"
    if isinstance(measure, DiscreteMeasure):
        return "discrete"
    raise MixedKinds(f"not a measure: {type(measure).__name__}")


@dataclass(frozen=True)
class MeasureSequence:
    """Finite window of a measure sequence on the dyadic grid 2**-level * Z.

    `grid_origin` is the time of the first element; element i sits at
    grid_origin + i * 2**-level.
    """

    elements: tuple
    level: int
    grid_origin: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "level", int(self.level))
        object.__setattr__(self, "grid_origin", float(self.grid_origin))
        _validate(self.elements, self.level)

    def __len__(self):
        return len(self.elements)

    def __getitem__(self, i):
        return self.elements[i]

    def __iter__(self):
        return iter(self.elements)

    @property
    def kind(self) -> str:
        return kind_of(self.elements[0])

    @property
    def dim(self) -> int:
        first = self.elements[0]
        return first.dim if isinstance(first, DiscreteMeasure) else 1

    @property
    def spacing(self) -> float:
        return 2.0 ** (-self.level)

    def time_of(self, index: int) -> float:
        return self.grid_origin + index * self.spacing

    def times(self) -> np.ndarray:
        return self.grid_origin + np.arange(len(self)) * self.spacing

    def with_elements(self, elements, level=None, grid_origin=None) -> "MeasureSequence":
        return MeasureSequence(
            tuple(elements),
            self.level if level is None else level,
            self.grid_origin if grid_origin is None else grid_origin,
        )


def _validate(elements, level):
    n = len(elements)
    if level < 0:
        raise BadParameter(f"level must be >= 0, got {level}")
    if n < 2 ** level + 1:
        raise LengthNotDyadic(
            f"length {n} < 2**{level} + 1 = {2 ** level + 1}"
        )
    if (n - 1) % (2 ** level) != 0:
        raise LengthNotDyadic(
            f"length {n} != 1 (mod 2**{level})"
        )
    kinds = {kind_of(e) for e in elements}
    if len(kinds) > 1:
        raise MixedKinds(f"sequence mixes kinds {sorted(kinds)}")
    if kinds == {"discrete"}:
        dims = {e.dim for e in elements}
        if len(dims) > 1:
            raise DimensionMismatch(f"elements have mixed dimensions {sorted(dims)}")


def validate_sequence(seq: MeasureSequence) -> None:
    """Re-check all sequence invariants; idempotent, raises on violation."""
    _validate(seq.elements, seq.level)


def default_level(n: int, cap: int = MAX_DEFAULT_LEVEL) -> int:
    """Largest J <= cap with n == 1 (mod 2**J); 0 when n is even."""
    if n < 2:
        raise LengthNotDyadic(f"sequence needs at least 2 elements, got {n}")
    j = 0
    while j < cap and (n - 1) % (2 ** (j + 1)) == 0:
        j += 1
    return j


# -- serialization ------------------------------------------------------------


def _atomic_write_text(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".wmt-", suffix=".tmp")
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def _read_text(path) -> str:
    try:
        with open(path, "r") as handle:
            return handle.read()
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc


def element_to_obj(measure):
    if isinstance(measure, GaussianMeasure):
        return {"mean": measure.mean, "variance": measure.variance}
    return {
        "atoms": measure.atoms.tolist(),
        "weights": measure.weights.tolist(),
    }


def element_from_obj(kind: str, obj, where: str):
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: element must be an object")
    try:
        if kind == "gaussian":
            return GaussianMeasure(obj["mean"], obj["variance"])
        return DiscreteMeasure(np.asarray(obj["atoms"], dtype=float), obj["weights"])
    except KeyError as exc:
        raise ParseError(f"{where}: missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: {exc}") from exc


def sequence_to_obj(seq: MeasureSequence) -> dict:
    return {
        "kind": seq.kind,
        "level": seq.level,
        "grid_origin": seq.grid_origin,
        "elements": [element_to_obj(e) for e in seq.elements],
    }


def sequence_from_obj(obj, where: str = "sequence") -> MeasureSequence:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected a JSON object")
    for key in ("kind", "level", "elements"):
        if key not in obj:
            raise ParseError(f"{where}: missing field '{key}'")
    kind = obj["kind"]
    if kind not in ("gaussian", "discrete"):
        raise ParseError(f"{where}: unknown kind {kind!r}")
    elements = obj["elements"]
    if not isinstance(elements, list) or not elements:
        raise ParseError(f"{where}: 'elements' must be a nonempty list")
    parsed = [
        element_from_obj(kind, e, f"{where}.elements[{i}]")
        for i, e in enumerate(elements)
    ]
    try:
        level = int(obj["level"])
        origin = float(obj.get("grid_origin", 0.0))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: bad level/grid_origin: {exc}") from exc
    return MeasureSequence(tuple(parsed), level, origin)


def _read_csv_sequence(text: str, path) -> MeasureSequence:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if len(rows) < 2:
        raise ParseError(f"{path}: CSV needs a header row and at least one weight row")
    try:
        support = [float(cell) for cell in rows[0]]
    except ValueError as exc:
        raise ParseError(f"{path}, line 1: bad support point: {exc}") from exc
    atoms = np.asarray(support, dtype=float).reshape(-1, 1)
    elements = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(support):
            raise ParseError(
                f"{path}, line {lineno}: expected {len(support)} columns, got {len(row)}"
            )
        try:
            weights = [float(cell) for cell in row]
        except ValueError as exc:
            raise ParseError(f"{path}, line {lineno}: bad weight: {exc}") from exc
        try:
            elements.append(DiscreteMeasure(atoms, weights))
        except (BadWeights, DimensionMismatch) as exc:
            raise ParseError(f"{path}, line {lineno}: {exc}") from exc
    return MeasureSequence(tuple(elements), default_level(len(elements)))


def read_sequence(path, format: str | None = None) -> MeasureSequence:
    """Read a sequence file; `format` is 'json' or 'csv' (inferred from suffix)."""
    fmt = format or ("csv" if str(path).endswith(".csv") else "json")
    text = _read_text(path)
    if not text.strip():
        raise ParseError(f"{path}: empty file")
    if fmt == "csv":
        return _read_csv_sequence(text, path)
    if fmt != "json":
        raise BadParameter(f"unknown format {fmt!r}")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    return sequence_from_obj(obj, where=str(path))


def write_sequence(seq: MeasureSequence, path, format: str | None = None) -> None:
    """Write a sequence; CSV needs discrete elements with a shared 1-D support."""
    fmt = format or ("csv" if str(path).endswith(".csv") else "json")
    if fmt == "json":
        _atomic_write_text(path, json.dumps(sequence_to_obj(seq)) + "\n")
        return
    if fmt != "csv":
        raise BadParameter(f"unknown format {fmt!r}")
    if seq.kind != "discrete" or seq.dim != 1:
        raise ParseError("CSV format supports only discrete sequences in R^1")
    support = np.unique(np.concatenate([e.atoms.ravel() for e in seq.elements]))
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow([repr(float(s)) for s in support])
    for element in seq.elements:
        row = np.zeros(len(support))
        idx = np.searchsorted(support, element.atoms.ravel())
        row[idx] = element.weights
        writer.writerow([repr(float(w)) for w in row])
    _atomic_write_text(path, buffer.getvalue())
